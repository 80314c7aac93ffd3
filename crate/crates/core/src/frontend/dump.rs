//! Stable textual renderings of syntax trees.
//!
//! [`dump_ast`] produces a structural dump (no spans) for golden tests.
//! [`print_source`] renders canonical Tea source that parses back to an
//! equal tree.

use std::fmt::Write;

use super::ast::*;
use super::token::KEYWORDS;
use crate::num::format_number;

pub fn dump_ast(tree: &SyntaxTree) -> String {
    if tree.is_empty() {
        return "Module{}".to_string();
    }
    let mut out = String::from("Module{\n");
    for i in &tree.imports {
        line(&mut out, 1, &format!("Import({})", i.module.name));
    }
    for m in &tree.models {
        line(&mut out, 1, &format!("Model({}){{", m.name.name));
        for f in &m.fields {
            let attrs: Vec<String> = f
                .attributes
                .iter()
                .map(|a| format!("{}={}", a.key.name, dump_literal(&a.value)))
                .collect();
            line(
                &mut out,
                2,
                &format!(
                    "Field{}({}, {}, {{{}}})",
                    if f.optional { "?" } else { "" },
                    f.name.name,
                    dump_type(&f.ty),
                    attrs.join(", ")
                ),
            );
        }
        line(&mut out, 1, "}");
    }
    for b in &tree.behavior_types {
        let params: Vec<String> = b.param_types.iter().map(dump_type).collect();
        line(
            &mut out,
            1,
            &format!(
                "BehaviorType({}, [{}], {})",
                b.name.name,
                params.join(", "),
                dump_type(&b.return_type)
            ),
        );
    }
    for a in &tree.apis {
        let params: Vec<String> = a
            .params
            .iter()
            .map(|p| format!("Param({}, {})", p.name.name, dump_type(&p.ty)))
            .collect();
        line(
            &mut out,
            1,
            &format!(
                "Api({}, [{}], {}){{",
                a.name.name,
                params.join(", "),
                dump_type(&a.return_type)
            ),
        );
        dump_block(&mut out, 2, "Request", &a.request_block);
        dump_block(&mut out, 2, "Returns", &a.returns_block);
        line(&mut out, 1, "}");
    }
    out.push('}');
    out
}

fn line(out: &mut String, depth: usize, text: &str) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str(text);
    out.push('\n');
}

fn dump_literal(l: &Literal) -> String {
    match l {
        Literal::String(s) => format!("StringLit({s:?})"),
        Literal::Number(n) => format!("NumberLit({})", format_number(*n)),
        Literal::Bool(b) => format!("BoolLit({b})"),
    }
}

pub fn dump_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::String => "String".into(),
        TypeExpr::Number => "Number".into(),
        TypeExpr::Boolean => "Boolean".into(),
        TypeExpr::Any => "Any".into(),
        TypeExpr::Readable => "Readable".into(),
        TypeExpr::Void => "Void".into(),
        TypeExpr::Map(k, v) => format!("Map({}, {})", dump_type(k), dump_type(v)),
        TypeExpr::Array(e) => format!("Array({})", dump_type(e)),
        TypeExpr::Named(n) => format!("Named({n})"),
    }
}

fn dump_block(out: &mut String, depth: usize, label: &str, block: &Block) {
    if block.stmts.is_empty() {
        line(out, depth, &format!("{label}{{}}"));
        return;
    }
    line(out, depth, &format!("{label}{{"));
    for s in &block.stmts {
        dump_stmt(out, depth + 1, s);
    }
    line(out, depth, "}");
}

fn dump_stmt(out: &mut String, depth: usize, s: &Stmt) {
    match &s.kind {
        StmtKind::VarDecl { name, init } => {
            line(out, depth, &format!("VarDecl({}, {})", name.name, dump_expr(init)))
        }
        StmtKind::Assign { target, value } => line(
            out,
            depth,
            &format!("Assign({}, {})", join_path(target), dump_expr(value)),
        ),
        StmtKind::Return(e) => line(out, depth, &format!("Return({})", dump_expr(e))),
        StmtKind::Expr(e) => line(out, depth, &format!("ExprStmt({})", dump_expr(e))),
        StmtKind::If {
            cond,
            then_block,
            else_ifs,
            else_block,
        } => {
            line(out, depth, &format!("If({}){{", dump_expr(cond)));
            dump_block(out, depth + 1, "Then", then_block);
            for (c, b) in else_ifs {
                dump_block(out, depth + 1, &format!("ElseIf({})", dump_expr(c)), b);
            }
            if let Some(b) = else_block {
                dump_block(out, depth + 1, "Else", b);
            }
            line(out, depth, "}");
        }
    }
}

pub fn join_path(segments: &[Ident]) -> String {
    segments
        .iter()
        .map(|s| s.name.as_str())
        .collect::<Vec<_>>()
        .join(".")
}

pub fn dump_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::StringLit(s) => format!("StringLit({s:?})"),
        ExprKind::TemplateString(parts) => {
            let parts: Vec<String> = parts
                .iter()
                .map(|p| match p {
                    TemplatePart::Lit(s) => format!("Lit({s:?})"),
                    TemplatePart::Expr(e) => dump_expr(e),
                })
                .collect();
            format!("TemplateString[{}]", parts.join(", "))
        }
        ExprKind::NumberLit(n) => format!("NumberLit({})", format_number(*n)),
        ExprKind::BoolLit(b) => format!("BoolLit({b})"),
        ExprKind::NullLit => "NullLit".into(),
        ExprKind::MapLit(entries) => {
            let entries: Vec<String> = entries
                .iter()
                .map(|(k, v)| format!("{:?}={}", k.name, dump_expr(v)))
                .collect();
            format!("MapLit{{{}}}", entries.join(", "))
        }
        ExprKind::PathAccess(segs) => format!("PathAccess({})", join_path(segs)),
        ExprKind::Call {
            module,
            method,
            args,
        } => format!(
            "Call({}.{}, [{}])",
            module.name,
            method.name,
            args.iter().map(dump_expr).collect::<Vec<_>>().join(", ")
        ),
        ExprKind::BehaviorCall { name, args } => format!(
            "BehaviorCall({}, [{}])",
            name.name,
            args.iter().map(dump_expr).collect::<Vec<_>>().join(", ")
        ),
        ExprKind::BinaryOp { op, lhs, rhs } => format!(
            "BinaryOp({}, {}, {})",
            op.symbol(),
            dump_expr(lhs),
            dump_expr(rhs)
        ),
    }
}

/// Renders canonical Tea source for `tree`.
pub fn print_source(tree: &SyntaxTree) -> String {
    let mut out = String::new();
    for i in &tree.imports {
        let _ = writeln!(out, "import {};", i.module.name);
    }
    for m in &tree.models {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "model {} {{", m.name.name);
        for f in &m.fields {
            let _ = write!(
                out,
                "  {}{}: {}",
                f.name.name,
                if f.optional { "?" } else { "" },
                f.ty
            );
            if !f.attributes.is_empty() {
                let attrs: Vec<String> = f
                    .attributes
                    .iter()
                    .map(|a| format!("{}={}", a.key.name, print_literal(&a.value)))
                    .collect();
                let _ = write!(out, "({})", attrs.join(", "));
            }
            out.push_str(",\n");
        }
        out.push_str("}\n");
    }
    for b in &tree.behavior_types {
        if !out.is_empty() {
            out.push('\n');
        }
        let params: Vec<String> = b.param_types.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(
            out,
            "type @{} = ({}): {}",
            b.name.name,
            params.join(", "),
            b.return_type
        );
    }
    for a in &tree.apis {
        if !out.is_empty() {
            out.push('\n');
        }
        let params: Vec<String> = a
            .params
            .iter()
            .map(|p| format!("{}: {}", p.name.name, p.ty))
            .collect();
        let _ = write!(
            out,
            "api {}({}): {} ",
            a.name.name,
            params.join(", "),
            a.return_type
        );
        print_block(&mut out, 0, &a.request_block);
        out.push_str(" returns ");
        print_block(&mut out, 0, &a.returns_block);
        out.push('\n');
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_block(out: &mut String, depth: usize, block: &Block) {
    if block.stmts.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for s in &block.stmts {
        print_stmt(out, depth + 1, s);
    }
    indent(out, depth);
    out.push('}');
}

fn print_stmt(out: &mut String, depth: usize, s: &Stmt) {
    indent(out, depth);
    match &s.kind {
        StmtKind::VarDecl { name, init } => {
            let _ = writeln!(out, "var {} = {};", name.name, print_expr(init));
        }
        StmtKind::Assign { target, value } => {
            let _ = writeln!(out, "{} = {};", join_path(target), print_expr(value));
        }
        StmtKind::Return(e) => {
            let _ = writeln!(out, "return {};", print_expr(e));
        }
        StmtKind::Expr(e) => {
            let _ = writeln!(out, "{};", print_expr(e));
        }
        StmtKind::If {
            cond,
            then_block,
            else_ifs,
            else_block,
        } => {
            let _ = write!(out, "if ({}) ", print_expr(cond));
            print_block(out, depth, then_block);
            for (c, b) in else_ifs {
                let _ = write!(out, " else if ({}) ", print_expr(c));
                print_block(out, depth, b);
            }
            if let Some(b) = else_block {
                out.push_str(" else ");
                print_block(out, depth, b);
            }
            out.push('\n');
        }
    }
}

fn print_literal(l: &Literal) -> String {
    match l {
        Literal::String(s) => quote_single(s),
        Literal::Number(n) => format_number(*n),
        Literal::Bool(b) => b.to_string(),
    }
}

fn quote_single(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn escape_template(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '`' => out.push_str("\\`"),
            '$' => out.push_str("\\$"),
            c => out.push(c),
        }
    }
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::StringLit(s) => quote_single(s),
        ExprKind::TemplateString(parts) => {
            let mut out = String::from("`");
            for p in parts {
                match p {
                    TemplatePart::Lit(s) => escape_template(s, &mut out),
                    TemplatePart::Expr(e) => {
                        out.push_str("${");
                        out.push_str(&print_expr(e));
                        out.push('}');
                    }
                }
            }
            out.push('`');
            out
        }
        ExprKind::NumberLit(n) => format_number(*n),
        ExprKind::BoolLit(b) => b.to_string(),
        ExprKind::NullLit => "null".into(),
        ExprKind::MapLit(entries) => {
            if entries.is_empty() {
                return "{}".into();
            }
            let entries: Vec<String> = entries
                .iter()
                .map(|(k, v)| {
                    let key = if is_plain_ident(&k.name) {
                        k.name.clone()
                    } else {
                        quote_single(&k.name)
                    };
                    format!("{key} = {},", print_expr(v))
                })
                .collect();
            format!("{{ {} }}", entries.join(" "))
        }
        ExprKind::PathAccess(segs) => join_path(segs),
        ExprKind::Call {
            module,
            method,
            args,
        } => format!(
            "{}.{}({})",
            module.name,
            method.name,
            args.iter().map(print_expr).collect::<Vec<_>>().join(", ")
        ),
        ExprKind::BehaviorCall { name, args } => format!(
            "@{}({})",
            name.name,
            args.iter().map(print_expr).collect::<Vec<_>>().join(", ")
        ),
        ExprKind::BinaryOp { op, lhs, rhs } => {
            let side = |e: &Expr| match e.kind {
                ExprKind::BinaryOp { .. } => format!("({})", print_expr(e)),
                _ => print_expr(e),
            };
            format!("{} {} {}", side(lhs), op.symbol(), side(rhs))
        }
    }
}

use std::collections::{BTreeMap, HashMap, HashSet};

use regex::Regex;

use super::builtins::{self, ATTRIBUTE_KEYS};
use super::{Diagnostic, SemanticModule, Severity};
use crate::frontend::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    Request,
    Returns,
}

enum Compat {
    Ok,
    AnyCast,
    No,
}

pub(super) fn analyze(tree: &SyntaxTree) -> SemanticModule {
    let mut cx = Checker {
        diagnostics: Vec::new(),
        models: BTreeMap::new(),
        behaviors: BTreeMap::new(),
        imports: BTreeMap::new(),
        patterns: HashMap::new(),
    };
    cx.declarations(tree);
    let mut apis = BTreeMap::new();
    for api in &tree.apis {
        let mut typed = api.clone();
        cx.api(&mut typed);
        apis.entry(api.name.name.clone()).or_insert(typed);
    }
    let mut diagnostics = cx.diagnostics;
    diagnostics.sort_by_key(|d| d.span);
    SemanticModule {
        models: cx.models,
        behaviors: cx.behaviors,
        apis,
        imports: cx.imports,
        diagnostics,
        patterns: cx.patterns,
    }
}

struct Checker {
    diagnostics: Vec<Diagnostic>,
    models: BTreeMap<String, ModelDecl>,
    behaviors: BTreeMap<String, BehaviorTypeDecl>,
    imports: BTreeMap<String, super::BuiltinModuleDescriptor>,
    patterns: HashMap<String, Regex>,
}

struct Scope {
    frames: Vec<HashMap<String, TypeExpr>>,
    block: BlockKind,
    return_type: TypeExpr,
}

impl Scope {
    fn lookup(&self, name: &str) -> Option<&TypeExpr> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }
}

impl Checker {
    fn error(&mut self, code: &str, message: impl Into<String>, span: Span) {
        self.diagnostics.push(Diagnostic {
            severity: Severity::Error,
            code: code.into(),
            message: message.into(),
            span,
        });
    }

    fn warning(&mut self, code: &str, message: impl Into<String>, span: Span) {
        self.diagnostics.push(Diagnostic {
            severity: Severity::Warning,
            code: code.into(),
            message: message.into(),
            span,
        });
    }

    fn declarations(&mut self, tree: &SyntaxTree) {
        let registry = builtins::builtin_modules();
        for import in &tree.imports {
            let name = &import.module.name;
            match registry.get(name) {
                Some(desc) => {
                    if self.imports.insert(name.clone(), desc.clone()).is_some() {
                        self.error(
                            "duplicate-declaration",
                            format!("module '{name}' imported twice"),
                            import.module.span,
                        );
                    }
                }
                None => self.error(
                    "unknown-import",
                    format!("no builtin module named '{name}'"),
                    import.module.span,
                ),
            }
        }

        let mut names: HashSet<&str> = HashSet::new();
        let decls = tree
            .models
            .iter()
            .map(|m| &m.name)
            .chain(tree.behavior_types.iter().map(|b| &b.name))
            .chain(tree.apis.iter().map(|a| &a.name));
        let mut dups = Vec::new();
        for name in decls {
            if !names.insert(&name.name) {
                dups.push(name.clone());
            }
        }
        for d in dups {
            self.error(
                "duplicate-declaration",
                format!("'{}' is declared more than once", d.name),
                d.span,
            );
        }

        for m in &tree.models {
            self.models.entry(m.name.name.clone()).or_insert_with(|| m.clone());
        }
        for b in &tree.behavior_types {
            self.behaviors
                .entry(b.name.name.clone())
                .or_insert_with(|| b.clone());
        }

        for m in &tree.models {
            self.model(m);
        }
        for b in &tree.behavior_types {
            for (t, span) in b.param_types.iter().zip(&b.param_type_spans) {
                self.resolve_type(t, *span, false);
            }
            self.resolve_type(&b.return_type, b.return_type_span, true);
        }
    }

    fn resolve_type(&mut self, ty: &TypeExpr, span: Span, allow_void: bool) {
        match ty {
            TypeExpr::Void if !allow_void => {
                self.error("invalid-type", "'void' is only valid as a return type", span)
            }
            TypeExpr::Named(n) if !self.models.contains_key(n) => {
                self.error("unknown-type", format!("unknown type '{n}'"), span)
            }
            TypeExpr::Map(_, v) => self.resolve_type(v, span, false),
            TypeExpr::Array(e) => self.resolve_type(e, span, false),
            _ => {}
        }
    }

    fn model(&mut self, m: &ModelDecl) {
        let mut seen = HashSet::new();
        for f in &m.fields {
            if !seen.insert(f.name.name.as_str()) {
                self.error(
                    "duplicate-field",
                    format!("field '{}' declared twice in model '{}'", f.name.name, m.name.name),
                    f.name.span,
                );
            }
            self.resolve_type(&f.ty, f.ty_span, false);
            self.attributes(f);
        }
    }

    fn attributes(&mut self, f: &FieldDecl) {
        let mut seen = HashSet::new();
        for a in &f.attributes {
            let key = a.key.name.as_str();
            if !ATTRIBUTE_KEYS.contains(&key) {
                self.error(
                    "invalid-attribute",
                    format!("unknown attribute '{key}' (expected one of {})", ATTRIBUTE_KEYS.join(", ")),
                    a.key.span,
                );
                continue;
            }
            if !seen.insert(key) {
                self.error("invalid-attribute", format!("attribute '{key}' given twice"), a.key.span);
                continue;
            }
            match (key, &a.value) {
                ("pattern", Literal::String(src)) => {
                    if !matches!(f.ty, TypeExpr::String | TypeExpr::Number | TypeExpr::Any) {
                        self.error(
                            "invalid-attribute",
                            format!("'pattern' does not apply to type {}", f.ty),
                            a.span,
                        );
                    }
                    match Regex::new(src) {
                        Ok(re) => {
                            self.patterns.insert(src.clone(), re);
                        }
                        Err(e) => self.error(
                            "invalid-pattern",
                            format!("invalid regular expression: {e}"),
                            a.span,
                        ),
                    }
                }
                ("min" | "max", Literal::Number(_)) => {
                    if !matches!(f.ty, TypeExpr::Number | TypeExpr::Any) {
                        self.error(
                            "invalid-attribute",
                            format!("'{key}' applies only to numbers, not {}", f.ty),
                            a.span,
                        );
                    }
                }
                ("minLength" | "maxLength", Literal::Number(n)) => {
                    if !matches!(f.ty, TypeExpr::String | TypeExpr::Array(_) | TypeExpr::Any) {
                        self.error(
                            "invalid-attribute",
                            format!("'{key}' applies only to strings and arrays, not {}", f.ty),
                            a.span,
                        );
                    } else if *n < 0.0 || n.fract() != 0.0 {
                        self.error(
                            "invalid-attribute",
                            format!("'{key}' must be a non-negative integer"),
                            a.span,
                        );
                    }
                }
                _ => self.error(
                    "invalid-attribute",
                    format!("attribute '{key}' has a value of the wrong kind"),
                    a.span,
                ),
            }
        }
        for (lo, hi) in [("min", "max"), ("minLength", "maxLength")] {
            if let (Some(l), Some(h)) = (
                f.attribute(lo).and_then(Literal::as_f64),
                f.attribute(hi).and_then(Literal::as_f64),
            ) {
                if l > h {
                    self.error(
                        "invalid-attribute",
                        format!("'{lo}' ({l}) exceeds '{hi}' ({h})"),
                        f.span,
                    );
                }
            }
        }
    }

    fn check_binding_name(&mut self, name: &Ident) {
        if name.name.starts_with("__") {
            self.error(
                "reserved-identifier",
                format!("identifiers starting with '__' are reserved: '{}'", name.name),
                name.span,
            );
        }
    }

    fn api(&mut self, api: &mut ApiDecl) {
        let mut params = HashMap::new();
        for p in &api.params {
            self.check_binding_name(&p.name);
            self.resolve_type(&p.ty, p.ty_span, false);
            if params.insert(p.name.name.clone(), p.ty.clone()).is_some() {
                self.error(
                    "duplicate-declaration",
                    format!("parameter '{}' declared twice", p.name.name),
                    p.name.span,
                );
            }
        }
        self.resolve_type(&api.return_type, api.return_type_span, true);

        let mut scope = Scope {
            frames: vec![params.clone()],
            block: BlockKind::Request,
            return_type: api.return_type.clone(),
        };
        self.block(&mut api.request_block, &mut scope);

        let mut scope = Scope {
            frames: vec![params],
            block: BlockKind::Returns,
            return_type: api.return_type.clone(),
        };
        self.block(&mut api.returns_block, &mut scope);

        if api.return_type != TypeExpr::Void && !contains_return(&api.returns_block.stmts) {
            self.error(
                "missing-return",
                format!(
                    "api '{}' declares return type {} but its returns block never returns",
                    api.name.name, api.return_type
                ),
                api.returns_block.span,
            );
        }
    }

    fn block(&mut self, block: &mut Block, scope: &mut Scope) {
        scope.frames.push(HashMap::new());
        for stmt in &mut block.stmts {
            self.stmt(stmt, scope);
        }
        scope.frames.pop();
    }

    fn stmt(&mut self, stmt: &mut Stmt, scope: &mut Scope) {
        match &mut stmt.kind {
            StmtKind::VarDecl { name, init } => {
                self.check_binding_name(name);
                let ty = self.expr(init, scope);
                if scope.lookup(&name.name).is_some() {
                    self.error(
                        "duplicate-declaration",
                        format!("'{}' is already declared in this scope", name.name),
                        name.span,
                    );
                }
                scope
                    .frames
                    .last_mut()
                    .expect("block frame")
                    .insert(name.name.clone(), ty);
            }
            StmtKind::Assign { target, value } => {
                let value_ty = self.expr(value, scope);
                if let Some(target_ty) = self.assign_target(target, scope) {
                    self.expect_assignable(value, &value_ty, &target_ty);
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_ifs,
                else_block,
            } => {
                self.condition(cond, scope);
                self.block(then_block, scope);
                for (c, b) in else_ifs {
                    self.condition(c, scope);
                    self.block(b, scope);
                }
                if let Some(b) = else_block {
                    self.block(b, scope);
                }
            }
            StmtKind::Return(e) => {
                let ty = self.expr(e, scope);
                if scope.block == BlockKind::Request {
                    self.error(
                        "return-in-request",
                        "'return' is only allowed in the returns block",
                        stmt.span,
                    );
                } else {
                    let target = scope.return_type.clone();
                    self.expect_assignable(e, &ty, &target);
                }
            }
            StmtKind::Expr(e) => {
                self.expr(e, scope);
            }
        }
    }

    fn condition(&mut self, cond: &mut Expr, scope: &mut Scope) {
        let ty = self.expr(cond, scope);
        if !matches!(ty, TypeExpr::Boolean | TypeExpr::Any) {
            self.error(
                "type-mismatch",
                format!("condition must be boolean, found {ty}"),
                cond.span,
            );
        }
    }

    fn assign_target(&mut self, target: &[Ident], scope: &Scope) -> Option<TypeExpr> {
        let head = &target[0];
        let span = head.span.to(target[target.len() - 1].span);
        match head.name.as_str() {
            REQUEST => {
                if scope.block == BlockKind::Returns {
                    self.error(
                        "request-mutation",
                        "the outgoing request cannot be modified in the returns block",
                        span,
                    );
                    return None;
                }
                if target.len() == 1 {
                    self.error("invalid-path", "cannot assign the whole request record", span);
                    return None;
                }
                self.record_path(target, builtins::request_field)
            }
            RESPONSE => {
                self.error("response-assignment", "'__response' is read-only", span);
                None
            }
            name => {
                let Some(ty) = scope.lookup(name).cloned() else {
                    self.error("unknown-variable", format!("unknown variable '{name}'"), head.span);
                    return None;
                };
                if target.len() > 1 {
                    self.error(
                        "unsupported-assignment",
                        "only '__request' fields can be assigned through a path",
                        span,
                    );
                    return None;
                }
                Some(ty)
            }
        }
    }

    fn record_path(
        &mut self,
        path: &[Ident],
        fields: fn(&str) -> Option<TypeExpr>,
    ) -> Option<TypeExpr> {
        let field = &path[1];
        let Some(ty) = fields(&field.name) else {
            self.error(
                "unknown-field",
                format!("'{}' has no field '{}'", path[0].name, field.name),
                field.span,
            );
            return None;
        };
        self.navigate(ty, &path[2..])
    }

    fn navigate(&mut self, mut ty: TypeExpr, rest: &[Ident]) -> Option<TypeExpr> {
        for seg in rest {
            ty = match ty {
                TypeExpr::Any => TypeExpr::Any,
                TypeExpr::Map(_, v) => *v,
                TypeExpr::Named(ref model) => {
                    let Some(m) = self.models.get(model) else {
                        return Some(TypeExpr::Any);
                    };
                    match m.field(&seg.name) {
                        Some(f) => f.ty.clone(),
                        None => {
                            self.error(
                                "unknown-field",
                                format!("model '{model}' has no field '{}'", seg.name),
                                seg.span,
                            );
                            return None;
                        }
                    }
                }
                other => {
                    self.error(
                        "invalid-path",
                        format!("cannot access '{}' on a value of type {other}", seg.name),
                        seg.span,
                    );
                    return None;
                }
            };
        }
        Some(ty)
    }

    fn expect_assignable(&mut self, value: &Expr, from: &TypeExpr, to: &TypeExpr) {
        if matches!(value.kind, ExprKind::NullLit) {
            return;
        }
        match assignable(from, to) {
            Compat::Ok => {}
            Compat::AnyCast => {
                let what = if matches!(to, TypeExpr::Named(_)) {
                    "implicit any-to-model cast".to_string()
                } else {
                    format!("implicit any-to-{to} cast")
                };
                self.warning("implicit-any-cast", what, value.span);
            }
            Compat::No => self.error(
                "type-mismatch",
                format!("type mismatch: expected {to}, found {from}"),
                value.span,
            ),
        }
    }

    fn expr(&mut self, e: &mut Expr, scope: &mut Scope) -> TypeExpr {
        let ty = self.expr_inner(e, scope);
        e.ty = Some(ty.clone());
        ty
    }

    fn expr_inner(&mut self, e: &mut Expr, scope: &mut Scope) -> TypeExpr {
        let span = e.span;
        match &mut e.kind {
            ExprKind::StringLit(_) => TypeExpr::String,
            ExprKind::NumberLit(_) => TypeExpr::Number,
            ExprKind::BoolLit(_) => TypeExpr::Boolean,
            ExprKind::NullLit => TypeExpr::Any,
            ExprKind::TemplateString(parts) => {
                for p in parts {
                    if let TemplatePart::Expr(hole) = p {
                        let ty = self.expr(hole, scope);
                        if !matches!(
                            ty,
                            TypeExpr::String | TypeExpr::Number | TypeExpr::Boolean | TypeExpr::Any
                        ) {
                            self.error(
                                "type-mismatch",
                                format!("cannot interpolate a value of type {ty}"),
                                hole.span,
                            );
                        }
                    }
                }
                TypeExpr::String
            }
            ExprKind::MapLit(entries) => {
                let mut keys = HashSet::new();
                let mut common: Option<TypeExpr> = None;
                let mut mixed = false;
                for (k, v) in entries.iter_mut() {
                    if !keys.insert(k.name.clone()) {
                        self.error("duplicate-key", format!("duplicate map key '{}'", k.name), k.span);
                    }
                    let ty = if matches!(v.kind, ExprKind::NullLit) {
                        self.expr(v, scope);
                        continue;
                    } else {
                        self.expr(v, scope)
                    };
                    match &common {
                        None => common = Some(ty),
                        Some(c) if *c != ty => mixed = true,
                        _ => {}
                    }
                }
                let value = if mixed { TypeExpr::Any } else { common.unwrap_or(TypeExpr::Any) };
                TypeExpr::map_of(value)
            }
            ExprKind::PathAccess(segments) => self.path(segments, scope).unwrap_or(TypeExpr::Any),
            ExprKind::Call {
                module,
                method,
                args,
            } => {
                let arg_types: Vec<TypeExpr> = args.iter_mut().map(|a| self.expr(a, scope)).collect();
                let Some(desc) = self.imports.get(&module.name) else {
                    let hint = if builtins::builtin_modules().contains_key(&module.name) {
                        format!(" (add 'import {};')", module.name)
                    } else {
                        String::new()
                    };
                    self.error(
                        "unknown-module",
                        format!("module '{}' is not imported{hint}", module.name),
                        module.span,
                    );
                    return TypeExpr::Any;
                };
                let Some(sig) = desc.functions.get(&method.name).cloned() else {
                    self.error(
                        "unknown-function",
                        format!("module '{}' has no function '{}'", module.name, method.name),
                        method.span,
                    );
                    return TypeExpr::Any;
                };
                if sig.params.len() != args.len() {
                    self.error(
                        "arity-mismatch",
                        format!(
                            "'{}.{}' takes {} argument(s), {} given",
                            module.name,
                            method.name,
                            sig.params.len(),
                            args.len()
                        ),
                        span,
                    );
                } else {
                    for ((a, ty), expected) in args.iter().zip(&arg_types).zip(&sig.params) {
                        self.expect_assignable(a, ty, expected);
                    }
                }
                sig.ret
            }
            ExprKind::BehaviorCall { name, args } => {
                let arg_types: Vec<TypeExpr> = args.iter_mut().map(|a| self.expr(a, scope)).collect();
                let Some(decl) = self.behaviors.get(&name.name).cloned() else {
                    self.error(
                        "unknown-behavior",
                        format!("behavior '@{}' is not declared", name.name),
                        name.span,
                    );
                    return TypeExpr::Any;
                };
                if decl.param_types.len() != args.len() {
                    self.error(
                        "behavior-arity",
                        format!(
                            "'@{}' takes {} argument(s), {} given",
                            name.name,
                            decl.param_types.len(),
                            args.len()
                        ),
                        span,
                    );
                } else {
                    for ((a, ty), expected) in args.iter().zip(&arg_types).zip(&decl.param_types) {
                        self.expect_assignable(a, ty, expected);
                    }
                }
                decl.return_type
            }
            ExprKind::BinaryOp { op, lhs, rhs } => {
                let l = self.expr(lhs, scope);
                let r = self.expr(rhs, scope);
                match op {
                    BinOp::Eq | BinOp::Ne => TypeExpr::Boolean,
                    BinOp::And | BinOp::Or => {
                        for (side, ty) in [(&**lhs, &l), (&**rhs, &r)] {
                            if !matches!(ty, TypeExpr::Boolean | TypeExpr::Any) {
                                self.error(
                                    "type-mismatch",
                                    format!("'{}' needs boolean operands, found {ty}", op.symbol()),
                                    side.span,
                                );
                            }
                        }
                        TypeExpr::Boolean
                    }
                    BinOp::Add => add_type(&l, &r).unwrap_or_else(|| {
                        self.error(
                            "type-mismatch",
                            format!("cannot apply '+' to {l} and {r}"),
                            span,
                        );
                        TypeExpr::Any
                    }),
                }
            }
        }
    }

    fn path(&mut self, segments: &[Ident], scope: &Scope) -> Option<TypeExpr> {
        let head = &segments[0];
        match head.name.as_str() {
            REQUEST => {
                if scope.block == BlockKind::Returns {
                    self.warning(
                        "request-in-returns",
                        "reading '__request' in the returns block",
                        head.span,
                    );
                }
                if segments.len() == 1 {
                    self.error("invalid-path", "the request record is not a value", head.span);
                    return None;
                }
                self.record_path(segments, builtins::request_field)
            }
            RESPONSE => {
                if scope.block == BlockKind::Request {
                    self.error(
                        "response-in-request",
                        "'__response' is not available in the request block",
                        head.span,
                    );
                    return None;
                }
                if segments.len() == 1 {
                    self.error("invalid-path", "the response record is not a value", head.span);
                    return None;
                }
                self.record_path(segments, builtins::response_field)
            }
            name => {
                let Some(ty) = scope.lookup(name).cloned() else {
                    self.error("unknown-variable", format!("unknown variable '{name}'"), head.span);
                    return None;
                };
                self.navigate(ty, &segments[1..])
            }
        }
    }
}

fn add_type(l: &TypeExpr, r: &TypeExpr) -> Option<TypeExpr> {
    use TypeExpr::*;
    match (l, r) {
        (Number, Number) => Some(Number),
        (String, String | Number | Boolean) | (Number | Boolean, String) => Some(String),
        (Any, String) | (String, Any) => Some(String),
        (Any, Any | Number | Boolean) | (Number | Boolean, Any) => Some(Any),
        _ => None,
    }
}

fn assignable(from: &TypeExpr, to: &TypeExpr) -> Compat {
    if from == to || *to == TypeExpr::Any {
        return Compat::Ok;
    }
    match (from, to) {
        (TypeExpr::Any, _) => Compat::AnyCast,
        (TypeExpr::String, TypeExpr::Readable) => Compat::Ok,
        (TypeExpr::Map(_, a), TypeExpr::Map(_, b)) | (TypeExpr::Array(a), TypeExpr::Array(b)) => {
            match assignable(a, b) {
                Compat::No => Compat::No,
                _ => Compat::Ok,
            }
        }
        _ => Compat::No,
    }
}

fn contains_return(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::If {
            then_block,
            else_ifs,
            else_block,
            ..
        } => {
            contains_return(&then_block.stmts)
                || else_ifs.iter().any(|(_, b)| contains_return(&b.stmts))
                || else_block.as_ref().is_some_and(|b| contains_return(&b.stmts))
        }
        _ => false,
    })
}

use std::collections::{BTreeMap, BTreeSet};

use super::code::Code;
use super::names::{IdentStyle, Namer};
use super::{
    behaviors_used, collect_locals, model_meta, type_descriptor, CodegenError, Emitter, EmitterTarget, FileSet,
    BUILTIN_BEHAVIORS,
};
use crate::frontend::*;
use crate::semantics::SemanticModule;
use crate::value::Value;

const CORE: &str = include_str!("python/tea_core.py");
const HEADER: &str = "# Generated by teaforge. Do not edit.";

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];
const INTERNAL: &[&str] = &["self", "tea_core", "MODELS", "API_METHODS", "_req", "_resp"];
const CLASS_RESERVED: &[&str] = &[
    "Model", "Client", "Behaviors", "Config", "Any", "Dict", "List", "Optional", "MODELS", "API_METHODS", "None",
    "True", "False",
];
const HOOK_RESERVED: &[&str] = &["require", "call", "to_json_string", "parse_json"];
const SAMPLE_RESERVED: &[&str] = &["client", "result", "tea_core", "Client"];

pub struct PythonEmitter;

fn target() -> EmitterTarget {
    EmitterTarget {
        target_id: "python",
        file_extension: "py",
        identifier_style: IdentStyle::SnakeCase,
        type_name: py_type,
        string_literal: py_str,
    }
}

fn py_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn py_float(n: f64) -> String {
    if n.is_finite() {
        format!("{n:?}")
    } else {
        format!("float({:?})", n.to_string())
    }
}

fn class_name(name: &str) -> String {
    let mut out = IdentStyle::PascalCase.apply(name);
    if CLASS_RESERVED.contains(&out.as_str()) {
        out.push('_');
    }
    out
}

fn py_type(ty: &TypeExpr) -> String {
    match ty {
        TypeExpr::String => "str".into(),
        TypeExpr::Number => "float".into(),
        TypeExpr::Boolean => "bool".into(),
        TypeExpr::Any => "Any".into(),
        TypeExpr::Readable => "bytes".into(),
        TypeExpr::Void => "None".into(),
        TypeExpr::Map(_, v) => format!("Dict[str, {}]", py_type(v)),
        TypeExpr::Array(e) => format!("List[{}]", py_type(e)),
        TypeExpr::Named(n) => class_name(n),
    }
}

fn descriptor(ty: &TypeExpr) -> String {
    type_descriptor(ty).to_string()
}

fn unsupported(span: Span, what: &str) -> CodegenError {
    CodegenError::UnsupportedConstruct {
        target: "python".into(),
        span,
        what: what.into(),
    }
}

fn list(items: impl IntoIterator<Item = String>) -> String {
    format!("[{}]", items.into_iter().collect::<Vec<_>>().join(", "))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    Request,
    Returns,
}

struct Lower<'n> {
    vars: &'n Namer<'n>,
    block: Block,
}

impl Lower<'_> {
    fn var(&self, id: &Ident) -> Result<String, CodegenError> {
        self.vars
            .get(&id.name)
            .map(str::to_string)
            .ok_or_else(|| unsupported(id.span, &format!("unresolved name '{}'", id.name)))
    }

    fn stmts(&self, code: &mut Code, stmts: &[Stmt]) -> Result<(), CodegenError> {
        let start = code.len();
        for s in stmts {
            self.stmt(code, s)?;
        }
        if code.len() == start {
            code.line("pass");
        }
        Ok(())
    }

    fn stmt(&self, code: &mut Code, stmt: &Stmt) -> Result<(), CodegenError> {
        match &stmt.kind {
            StmtKind::VarDecl { name, init } => {
                code.line(format!("{} = {}", self.var(name)?, self.expr(init)?));
            }
            StmtKind::Assign { target, value } => match target[0].name.as_str() {
                REQUEST if self.block == Block::Request && target.len() > 1 => {
                    let path = list(target[1..].iter().map(|i| py_str(&i.name)));
                    code.line(format!("tea_core.set_request(_req, {path}, {})", self.expr(value)?));
                }
                _ if target.len() == 1 && !target[0].name.starts_with("__") => {
                    code.line(format!("{} = {}", self.var(&target[0])?, self.expr(value)?));
                }
                _ => return Err(unsupported(stmt.span, "this assignment")),
            },
            StmtKind::If {
                cond,
                then_block,
                else_ifs,
                else_block,
            } => {
                code.line(format!("if tea_core.cond({}):", self.expr(cond)?)).indent();
                self.stmts(code, &then_block.stmts)?;
                code.dedent();
                for (c, b) in else_ifs {
                    code.line(format!("elif tea_core.cond({}):", self.expr(c)?)).indent();
                    self.stmts(code, &b.stmts)?;
                    code.dedent();
                }
                if let Some(b) = else_block {
                    code.line("else:").indent();
                    self.stmts(code, &b.stmts)?;
                    code.dedent();
                }
            }
            StmtKind::Return(e) if self.block == Block::Returns => {
                code.line(format!("return {}", self.expr(e)?));
            }
            StmtKind::Return(_) => return Err(unsupported(stmt.span, "return in a request block")),
            StmtKind::Expr(e) => {
                code.line(self.expr(e)?);
            }
        }
        Ok(())
    }

    fn args(&self, args: &[Expr]) -> Result<String, CodegenError> {
        Ok(list(args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>, _>>()?))
    }

    fn expr(&self, e: &Expr) -> Result<String, CodegenError> {
        Ok(match &e.kind {
            ExprKind::StringLit(s) => py_str(s),
            ExprKind::NumberLit(n) => py_float(*n),
            ExprKind::BoolLit(b) => (if *b { "True" } else { "False" }).into(),
            ExprKind::NullLit => "None".into(),
            ExprKind::TemplateString(parts) => {
                let parts = parts
                    .iter()
                    .map(|p| match p {
                        TemplatePart::Lit(s) => Ok(py_str(s)),
                        TemplatePart::Expr(x) => Ok(format!("tea_core.hole({})", self.expr(x)?)),
                    })
                    .collect::<Result<Vec<_>, CodegenError>>()?;
                format!("\"\".join({})", list(parts))
            }
            ExprKind::MapLit(entries) => {
                let items = entries
                    .iter()
                    .map(|(k, v)| Ok(format!("{}: {}", py_str(&k.name), self.expr(v)?)))
                    .collect::<Result<Vec<_>, CodegenError>>()?;
                format!("{{{}}}", items.join(", "))
            }
            ExprKind::PathAccess(segs) => {
                let (base, consumed) = match segs[0].name.as_str() {
                    REQUEST if segs.len() > 1 => {
                        (format!("tea_core.request_field(_req, {})", py_str(&segs[1].name)), 2)
                    }
                    RESPONSE if segs.len() > 1 && self.block == Block::Returns => {
                        (format!("tea_core.response_field(_resp, {})", py_str(&segs[1].name)), 2)
                    }
                    REQUEST | RESPONSE => return Err(unsupported(e.span, "this use of a reserved record")),
                    _ => (self.var(&segs[0])?, 1),
                };
                if segs.len() == consumed {
                    base
                } else {
                    let all = list(segs.iter().map(|s| py_str(&s.name)));
                    format!("tea_core.get_path({base}, {all}, {consumed})")
                }
            }
            ExprKind::Call { module, method, args } => format!(
                "tea_core.builtin({}, {}, {})",
                py_str(&module.name),
                py_str(&method.name),
                self.args(args)?
            ),
            ExprKind::BehaviorCall { name, args } => {
                format!("self._behaviors.call({}, {})", py_str(&name.name), self.args(args)?)
            }
            ExprKind::BinaryOp { op, lhs, rhs } => {
                let (l, r) = (self.expr(lhs)?, self.expr(rhs)?);
                match op {
                    BinOp::Add => format!("tea_core.add({l}, {r})"),
                    BinOp::Eq => format!("tea_core.eq({l}, {r})"),
                    BinOp::Ne => format!("(not tea_core.eq({l}, {r}))"),
                    BinOp::And => format!("(tea_core.as_bool({l}, \"&&\") and tea_core.as_bool({r}, \"&&\"))"),
                    BinOp::Or => format!("(tea_core.as_bool({l}, \"||\") or tea_core.as_bool({r}, \"||\"))"),
                }
            }
        })
    }
}

fn reserved_vars() -> Vec<&'static str> {
    KEYWORDS.iter().chain(INTERNAL).copied().collect()
}

fn model_classes(module: &SemanticModule) -> Result<Vec<(String, &ModelDecl)>, CodegenError> {
    let mut namer = Namer::new("python", IdentStyle::PascalCase, CLASS_RESERVED);
    module
        .models_in_order()
        .into_iter()
        .map(|m| Ok((namer.declare(&m.name.name, m.name.span)?, m)))
        .collect()
}

fn emit_models(module: &SemanticModule) -> Result<String, CodegenError> {
    let mut code = Code::new("    ");
    code.line(HEADER)
        .line("from __future__ import annotations")
        .blank()
        .line("from typing import Any, Dict, List, Optional")
        .blank()
        .line("import tea_core");
    let classes = model_classes(module)?;
    for (class, model) in &classes {
        code.blank().blank().line(format!("class {class}(tea_core.Model):")).indent();
        let meta = model_meta(model).to_string();
        if meta.contains("\"\"\"") {
            code.line(format!("META = tea_core.meta({})", py_str(&meta)));
        } else {
            code.line(format!("META = tea_core.meta(r\"\"\"{meta}\"\"\")"));
        }
        if !model.fields.is_empty() {
            code.blank();
        }
        for f in &model.fields {
            let mut name = f.name.name.clone();
            if KEYWORDS.contains(&name.as_str()) {
                name.push('_');
            }
            let ty = py_type(&f.ty);
            if f.optional {
                code.line(format!("{name}: Optional[{ty}]"));
            } else {
                code.line(format!("{name}: {ty}"));
            }
        }
        code.dedent();
    }
    code.blank().blank();
    code.line(format!(
        "MODELS = tea_core.registry({})",
        list(classes.iter().map(|(c, _)| c.clone()))
    ));
    Ok(code.finish())
}

fn emit_client(module: &SemanticModule) -> Result<String, CodegenError> {
    let mut code = Code::new("    ");
    code.line(HEADER)
        .line("from __future__ import annotations")
        .blank()
        .line("from typing import Any, Dict, List, Optional")
        .blank()
        .line("import tea_core")
        .line("from models import MODELS");
    let classes = model_classes(module)?;
    if !classes.is_empty() {
        let names: Vec<_> = classes.iter().map(|(c, _)| c.as_str()).collect();
        code.line(format!("from models import {}", names.join(", ")));
    }

    // Behavior hooks.
    let hook_reserved: Vec<&str> = KEYWORDS.iter().chain(HOOK_RESERVED).copied().collect();
    let mut hooks = Namer::new("python", IdentStyle::SnakeCase, &hook_reserved);
    let custom: Vec<_> = module
        .behaviors_in_order()
        .into_iter()
        .filter(|b| !BUILTIN_BEHAVIORS.contains(&b.name.name.as_str()))
        .collect();
    code.blank().blank().line("class Behaviors(tea_core.Behaviors):").indent();
    code.line("\"\"\"Implementations for the module's behavior types.\"\"\"");
    code.blank();
    let mut methods = vec!["**tea_core.Behaviors.METHODS".to_string()];
    for b in &custom {
        let m = hooks.declare(&b.name.name, b.name.span)?;
        methods.push(format!("{}: {}", py_str(&b.name.name), py_str(&m)));
    }
    code.line(format!("METHODS = {{{}}}", methods.join(", ")));
    for b in &custom {
        let m = hooks.get(&b.name.name).expect("declared above");
        let params: Vec<_> = b
            .param_types
            .iter()
            .enumerate()
            .map(|(i, t)| format!(", arg{i}: {}", py_type(t)))
            .collect();
        code.blank()
            .line("@tea_core.abstract")
            .line(format!(
                "def {m}(self{}) -> {}:",
                params.concat(),
                py_type(&b.return_type)
            ))
            .indent()
            .line(format!("raise NotImplementedError({})", py_str(&format!("@{}", b.name.name))))
            .dedent();
    }
    code.dedent();

    // Client.
    code.blank().blank().line("class Client:").indent();
    code.line("def __init__(self, transport=None, config: Optional[tea_core.Config] = None, behaviors: Optional[Behaviors] = None):")
        .indent()
        .line("self._transport = transport if transport is not None else tea_core.default_transport()")
        .line("self._config = config if config is not None else tea_core.Config()")
        .line("self._behaviors = behaviors if behaviors is not None else Behaviors()")
        .dedent();

    let mut methods = Namer::new("python", IdentStyle::SnakeCase, KEYWORDS);
    let mut table = Vec::new();
    for api in module.apis_in_order() {
        let method = methods.declare(&api.name.name, api.name.span)?;
        let reserved = reserved_vars();
        let mut vars = Namer::new("python", IdentStyle::SnakeCase, &reserved);
        for r in INTERNAL {
            vars.reserve(r);
        }
        for p in &api.params {
            vars.declare(&p.name.name, p.name.span)?;
        }
        let mut locals = Vec::new();
        collect_locals(&api.request_block.stmts, &mut locals);
        collect_locals(&api.returns_block.stmts, &mut locals);
        for l in locals {
            vars.declare(&l.name, l.span)?;
        }
        let params: Vec<String> = api.params.iter().map(|p| vars.get(&p.name.name).unwrap().to_string()).collect();
        let signature: String = api
            .params
            .iter()
            .zip(&params)
            .map(|(p, n)| format!(", {n}: {}", py_type(&p.ty)))
            .collect();

        code.blank()
            .line(format!("def {method}(self{signature}) -> {}:", py_type(&api.return_type)))
            .indent();
        let used = behaviors_used(api);
        if !used.is_empty() {
            code.line(format!(
                "self._behaviors.require({})",
                list(used.iter().map(|b| py_str(b)))
            ));
        }
        for n in &params {
            code.line(format!("{n} = tea_core.norm({n})"));
        }
        let checks = api
            .params
            .iter()
            .zip(&params)
            .map(|(p, n)| format!("({}, {}, {n})", py_str(&p.name.name), descriptor(&p.ty)));
        code.line(format!("tea_core.check_args(MODELS, {})", list(checks)));
        code.line("_req = tea_core.Exchange(self._config)");
        let lower = Lower {
            vars: &vars,
            block: Block::Request,
        };
        for s in &api.request_block.stmts {
            lower.stmt(&mut code, s)?;
        }
        code.line("_resp = tea_core.send(self._transport, _req, self._config)");
        let call_args: String = params.iter().map(|n| format!(", {n}")).collect();
        code.line(format!(
            "return tea_core.finish(MODELS, {}, self._{method}_returns(_req, _resp{call_args}))",
            descriptor(&api.return_type)
        ));
        code.dedent();

        code.blank()
            .line(format!("def _{method}_returns(self, _req, _resp{call_args}):"))
            .indent();
        let lower = Lower {
            vars: &vars,
            block: Block::Returns,
        };
        for s in &api.returns_block.stmts {
            lower.stmt(&mut code, s)?;
        }
        if !matches!(api.returns_block.stmts.last(), Some(Stmt { kind: StmtKind::Return(_), .. })) {
            code.line("return tea_core.NO_RETURN");
        }
        code.dedent();

        let dsl_params = list(api.params.iter().map(|p| py_str(&p.name.name)));
        table.push(format!("{}: ({}, {dsl_params})", py_str(&api.name.name), py_str(&method)));
    }
    code.dedent();
    code.blank().blank();
    if table.is_empty() {
        code.line("API_METHODS = {}");
    } else {
        code.line("API_METHODS = {").indent();
        for row in table {
            code.line(format!("{row},"));
        }
        code.dedent().line("}");
    }
    Ok(code.finish())
}

/// Type-directed Python literal for a value; models become class calls.
fn py_value(ty: &TypeExpr, v: &Value, module: &SemanticModule, used: &mut BTreeSet<String>) -> String {
    match (ty, v) {
        (_, Value::Null) => "None".into(),
        (_, Value::Bool(b)) => (if *b { "True" } else { "False" }).into(),
        (_, Value::Number(n)) => py_float(*n),
        (_, Value::String(s)) => py_str(s),
        (_, Value::Bytes(b)) => {
            let hex: String = b.iter().map(|x| format!("{x:02x}")).collect();
            format!("bytes.fromhex({})", py_str(&hex))
        }
        (TypeExpr::Array(et), Value::Array(items)) => list(items.iter().map(|x| py_value(et, x, module, used))),
        (_, Value::Array(items)) => list(items.iter().map(|x| py_value(&TypeExpr::Any, x, module, used))),
        (TypeExpr::Named(n), Value::Map(m)) if module.models.contains_key(n) => {
            let model = &module.models[n];
            let entries: Vec<_> = m
                .iter()
                .map(|(k, x)| {
                    let fty = model.field(k).map(|f| f.ty.clone()).unwrap_or(TypeExpr::Any);
                    format!("{}: {}", py_str(k), py_value(&fty, x, module, used))
                })
                .collect();
            let class = class_name(n);
            used.insert(class.clone());
            format!("{class}({{{}}})", entries.join(", "))
        }
        (ty, Value::Map(m)) => {
            let vt = match ty {
                TypeExpr::Map(_, vt) => vt.as_ref().clone(),
                _ => TypeExpr::Any,
            };
            let entries: Vec<_> = m
                .iter()
                .map(|(k, x)| format!("{}: {}", py_str(k), py_value(&vt, x, module, used)))
                .collect();
            format!("{{{}}}", entries.join(", "))
        }
    }
}

impl Emitter for PythonEmitter {
    fn target(&self) -> EmitterTarget {
        target()
    }

    fn emit_module(&self, module: &SemanticModule) -> Result<FileSet, CodegenError> {
        let mut files = FileSet::new();
        files.insert("tea_core.py", CORE);
        files.insert("models.py", emit_models(module)?);
        files.insert("client.py", emit_client(module)?);
        Ok(files)
    }

    fn emit_sample(
        &self,
        module: &SemanticModule,
        api: &str,
        args: &BTreeMap<String, Value>,
    ) -> Result<String, CodegenError> {
        let decl = module
            .apis
            .get(api)
            .ok_or_else(|| CodegenError::UnknownApi(api.to_string()))?;
        let method = Namer::new("python", IdentStyle::SnakeCase, KEYWORDS).spell(&decl.name.name);
        let reserved: Vec<&str> = KEYWORDS.iter().chain(SAMPLE_RESERVED).copied().collect();
        let mut vars = Namer::new("python", IdentStyle::SnakeCase, &reserved);
        let mut used = BTreeSet::new();
        let mut setup = Vec::new();
        let mut call_args = Vec::new();
        for p in &decl.params {
            let v = args.get(&p.name.name).cloned().unwrap_or(Value::Null);
            let literal = py_value(&p.ty, &v, module, &mut used);
            if matches!(p.ty, TypeExpr::Named(_)) && !v.is_null() {
                let var = vars.declare(&p.name.name, p.name.span)?;
                setup.push(format!("{var} = {literal}"));
                call_args.push(var);
            } else {
                call_args.push(literal);
            }
        }
        let mut code = Code::new("    ");
        code.line("import tea_core").line("from client import Client");
        if !used.is_empty() {
            code.line(format!("from models import {}", used.into_iter().collect::<Vec<_>>().join(", ")));
        }
        code.blank().line("client = Client(tea_core.default_transport())");
        for s in setup {
            code.line(s);
        }
        code.line(format!("result = client.{method}({})", call_args.join(", ")));
        code.line("print(tea_core.to_json_string(result))");
        Ok(code.finish())
    }
}

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

const CORE: &str = include_str!("typescript/tea_core.ts");
const HEADER: &str = "// Generated by teaforge. Do not edit.";

const KEYWORDS: &[&str] = &[
    "break", "case", "catch", "class", "const", "continue", "debugger", "default", "delete", "do", "else", "enum",
    "export", "extends", "false", "finally", "for", "function", "if", "import", "in", "instanceof", "new", "null",
    "return", "super", "switch", "this", "throw", "true", "try", "typeof", "var", "void", "while", "with", "yield",
    "let", "static", "implements", "interface", "package", "private", "protected", "public", "await", "async",
    "arguments", "eval", "undefined", "of", "type", "any", "unknown", "never", "object",
];
const INTERNAL: &[&str] = &["tea", "MODELS", "API_METHODS", "_req", "_resp"];
const TYPE_RESERVED: &[&str] = &[
    "Client", "Behaviors", "BehaviorHooks", "Array", "Boolean", "Date", "Error", "Map", "Number", "Object",
    "Promise", "Record", "Set", "String", "Symbol", "Uint8Array", "Partial",
];
const SAMPLE_RESERVED: &[&str] = &["client", "result", "main", "tea", "Client"];

pub struct TypeScriptEmitter;

fn ts_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn ts_num(n: f64) -> String {
    if n.is_finite() {
        format!("{n:?}")
    } else if n.is_nan() {
        "NaN".into()
    } else if n > 0.0 {
        "Infinity".into()
    } else {
        "-Infinity".into()
    }
}

fn type_name(name: &str) -> String {
    let mut out = IdentStyle::PascalCase.apply(name);
    if TYPE_RESERVED.contains(&out.as_str()) {
        out.push('_');
    }
    out
}

fn ts_type(ty: &TypeExpr) -> String {
    match ty {
        TypeExpr::String => "string".into(),
        TypeExpr::Number => "number".into(),
        TypeExpr::Boolean => "boolean".into(),
        TypeExpr::Any => "unknown".into(),
        TypeExpr::Readable => "tea.Readable".into(),
        TypeExpr::Void => "void".into(),
        TypeExpr::Map(_, v) => format!("{{ [key: string]: {} }}", ts_type(v)),
        TypeExpr::Array(e) => format!("Array<{}>", ts_type(e)),
        TypeExpr::Named(n) => type_name(n),
    }
}

fn descriptor(ty: &TypeExpr) -> String {
    type_descriptor(ty).to_string()
}

fn unsupported(span: Span, what: &str) -> CodegenError {
    CodegenError::UnsupportedConstruct {
        target: "typescript".into(),
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

    fn block(&self, code: &mut Code, stmts: &[Stmt]) -> Result<(), CodegenError> {
        code.indent();
        for s in stmts {
            self.stmt(code, s)?;
        }
        code.dedent();
        Ok(())
    }

    fn stmt(&self, code: &mut Code, stmt: &Stmt) -> Result<(), CodegenError> {
        match &stmt.kind {
            StmtKind::VarDecl { name, init } => {
                code.line(format!("let {}: unknown = {};", self.var(name)?, self.expr(init)?));
            }
            StmtKind::Assign { target, value } => match target[0].name.as_str() {
                REQUEST if self.block == Block::Request && target.len() > 1 => {
                    let path = list(target[1..].iter().map(|i| ts_str(&i.name)));
                    code.line(format!("tea.setRequest(_req, {path}, {});", self.expr(value)?));
                }
                _ if target.len() == 1 && !target[0].name.starts_with("__") => {
                    code.line(format!("{} = {};", self.var(&target[0])?, self.expr(value)?));
                }
                _ => return Err(unsupported(stmt.span, "this assignment")),
            },
            StmtKind::If {
                cond,
                then_block,
                else_ifs,
                else_block,
            } => {
                code.line(format!("if (tea.cond({})) {{", self.expr(cond)?));
                self.block(code, &then_block.stmts)?;
                for (c, b) in else_ifs {
                    code.line(format!("}} else if (tea.cond({})) {{", self.expr(c)?));
                    self.block(code, &b.stmts)?;
                }
                if let Some(b) = else_block {
                    code.line("} else {");
                    self.block(code, &b.stmts)?;
                }
                code.line("}");
            }
            StmtKind::Return(e) if self.block == Block::Returns => {
                code.line(format!("return {};", self.expr(e)?));
            }
            StmtKind::Return(_) => return Err(unsupported(stmt.span, "return in a request block")),
            StmtKind::Expr(e) => {
                code.line(format!("{};", self.expr(e)?));
            }
        }
        Ok(())
    }

    fn args(&self, args: &[Expr]) -> Result<String, CodegenError> {
        Ok(list(args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>, _>>()?))
    }

    fn expr(&self, e: &Expr) -> Result<String, CodegenError> {
        Ok(match &e.kind {
            ExprKind::StringLit(s) => ts_str(s),
            ExprKind::NumberLit(n) => ts_num(*n),
            ExprKind::BoolLit(b) => b.to_string(),
            ExprKind::NullLit => "null".into(),
            ExprKind::TemplateString(parts) => {
                let parts = parts
                    .iter()
                    .map(|p| match p {
                        TemplatePart::Lit(s) => Ok(ts_str(s)),
                        TemplatePart::Expr(x) => Ok(format!("tea.hole({})", self.expr(x)?)),
                    })
                    .collect::<Result<Vec<_>, CodegenError>>()?;
                format!("{}.join(\"\")", list(parts))
            }
            ExprKind::MapLit(entries) => {
                let items = entries
                    .iter()
                    .map(|(k, v)| Ok(format!("[{}, {}]", ts_str(&k.name), self.expr(v)?)))
                    .collect::<Result<Vec<_>, CodegenError>>()?;
                format!("tea.map({})", list(items))
            }
            ExprKind::PathAccess(segs) => {
                let (base, consumed) = match segs[0].name.as_str() {
                    REQUEST if segs.len() > 1 => (format!("tea.requestField(_req, {})", ts_str(&segs[1].name)), 2),
                    RESPONSE if segs.len() > 1 && self.block == Block::Returns => {
                        (format!("tea.responseField(_resp, {})", ts_str(&segs[1].name)), 2)
                    }
                    REQUEST | RESPONSE => return Err(unsupported(e.span, "this use of a reserved record")),
                    _ => (self.var(&segs[0])?, 1),
                };
                if segs.len() == consumed {
                    base
                } else {
                    let all = list(segs.iter().map(|s| ts_str(&s.name)));
                    format!("tea.getPath({base}, {all}, {consumed})")
                }
            }
            ExprKind::Call { module, method, args } => format!(
                "tea.builtin({}, {}, {})",
                ts_str(&module.name),
                ts_str(&method.name),
                self.args(args)?
            ),
            ExprKind::BehaviorCall { name, args } => {
                format!("this.behaviors.call({}, {})", ts_str(&name.name), self.args(args)?)
            }
            ExprKind::BinaryOp { op, lhs, rhs } => {
                let (l, r) = (self.expr(lhs)?, self.expr(rhs)?);
                match op {
                    BinOp::Add => format!("tea.add({l}, {r})"),
                    BinOp::Eq => format!("tea.eq({l}, {r})"),
                    BinOp::Ne => format!("!tea.eq({l}, {r})"),
                    BinOp::And => format!("(tea.asBool({l}, \"&&\") && tea.asBool({r}, \"&&\"))"),
                    BinOp::Or => format!("(tea.asBool({l}, \"||\") || tea.asBool({r}, \"||\"))"),
                }
            }
        })
    }
}

fn model_types(module: &SemanticModule) -> Result<Vec<(String, &ModelDecl)>, CodegenError> {
    let mut namer = Namer::new("typescript", IdentStyle::PascalCase, TYPE_RESERVED);
    module
        .models_in_order()
        .into_iter()
        .map(|m| Ok((namer.declare(&m.name.name, m.name.span)?, m)))
        .collect()
}

fn emit_models(module: &SemanticModule) -> Result<String, CodegenError> {
    let mut code = Code::new("  ");
    code.line(HEADER).line("import * as tea from \"./tea_core\";");
    let types = model_types(module)?;
    let mut registry = Vec::new();
    for (name, model) in &types {
        code.blank().line(format!("export interface {name} {{")).indent();
        for f in &model.fields {
            let opt = if f.optional { "?" } else { "" };
            code.line(format!("{}{opt}: {};", ts_str(&f.name.name), ts_type(&f.ty)));
        }
        code.dedent().line("}");
        code.blank()
            .line(format!("export const {name}Meta: tea.ModelMeta = {};", model_meta(model)));
        registry.push(format!("{}: {name}Meta", ts_str(&model.name.name)));
    }
    code.blank()
        .line(format!("export const MODELS: tea.Models = {{ {} }};", registry.join(", ")));
    Ok(code.finish())
}

fn emit_client(module: &SemanticModule) -> Result<String, CodegenError> {
    let mut code = Code::new("  ");
    code.line(HEADER).line("import * as tea from \"./tea_core\";");
    let types = model_types(module)?;
    let mut imports: Vec<&str> = vec!["MODELS"];
    imports.extend(types.iter().map(|(n, _)| n.as_str()));
    code.line(format!("import {{ {} }} from \"./models\";", imports.join(", ")));

    code.blank().line("/** Signatures of the module's behavior types. */");
    code.line("export interface BehaviorHooks {").indent();
    for b in module.behaviors_in_order() {
        if BUILTIN_BEHAVIORS.contains(&b.name.name.as_str()) {
            continue;
        }
        let params: Vec<_> = b
            .param_types
            .iter()
            .enumerate()
            .map(|(i, t)| format!("arg{i}: {}", ts_type(t)))
            .collect();
        code.line(format!("{}({}): {};", ts_str(&b.name.name), params.join(", "), ts_type(&b.return_type)));
    }
    code.dedent().line("}");
    code.blank()
        .line("export class Behaviors extends tea.Behaviors {")
        .indent()
        .line("constructor(hooks: Partial<BehaviorHooks> = {}) {")
        .indent()
        .line("super(hooks as unknown as { [name: string]: tea.BehaviorFn });")
        .dedent()
        .line("}")
        .dedent()
        .line("}");

    code.blank().line("export class Client {").indent();
    code.line("private transport: tea.Transport;")
        .line("private config: tea.Config;")
        .line("private behaviors: tea.Behaviors;")
        .blank()
        .line("constructor(transport?: tea.Transport, config?: tea.Config, behaviors?: tea.Behaviors) {")
        .indent()
        .line("this.transport = transport ?? tea.defaultTransport();")
        .line("this.config = config ?? new tea.Config();")
        .line("this.behaviors = behaviors ?? new Behaviors();")
        .dedent()
        .line("}");

    let method_reserved: Vec<&str> = KEYWORDS
        .iter()
        .chain(&["constructor", "transport", "config", "behaviors"])
        .copied()
        .collect();
    let mut methods = Namer::new("typescript", IdentStyle::CamelCase, &method_reserved);
    let mut table = Vec::new();
    for api in module.apis_in_order() {
        let method = methods.declare(&api.name.name, api.name.span)?;
        let reserved: Vec<&str> = KEYWORDS.iter().chain(INTERNAL).copied().collect();
        let mut vars = Namer::new("typescript", IdentStyle::CamelCase, &reserved);
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
        let signature: Vec<String> = api
            .params
            .iter()
            .zip(&params)
            .map(|(p, n)| format!("{n}: {}", ts_type(&p.ty)))
            .collect();
        let ret = ts_type(&api.return_type);

        code.blank()
            .line(format!("async {method}({}): Promise<{ret}> {{", signature.join(", ")))
            .indent();
        let used = behaviors_used(api);
        if !used.is_empty() {
            code.line(format!("this.behaviors.require({});", list(used.iter().map(|b| ts_str(b)))));
        }
        let checks = api
            .params
            .iter()
            .zip(&params)
            .map(|(p, n)| format!("[{}, {}, {n}]", ts_str(&p.name.name), descriptor(&p.ty)));
        code.line(format!("tea.checkArgs(MODELS, {});", list(checks)));
        code.line("const _req = new tea.Exchange(this.config);");
        let lower = Lower {
            vars: &vars,
            block: Block::Request,
        };
        for s in &api.request_block.stmts {
            lower.stmt(&mut code, s)?;
        }
        code.line("const _resp = await tea.send(this.transport, _req, this.config);");
        let call_args: String = params.iter().map(|n| format!(", {n}")).collect();
        code.line(format!(
            "return tea.finish(MODELS, {}, this._{method}Returns(_req, _resp{call_args})) as {ret};",
            descriptor(&api.return_type)
        ));
        code.dedent().line("}");

        let typed_args: String = signature.iter().map(|s| format!(", {s}")).collect();
        code.blank()
            .line(format!(
                "private _{method}Returns(_req: tea.Exchange, _resp: tea.Response{typed_args}): unknown {{"
            ))
            .indent();
        let lower = Lower {
            vars: &vars,
            block: Block::Returns,
        };
        for s in &api.returns_block.stmts {
            lower.stmt(&mut code, s)?;
        }
        if !matches!(api.returns_block.stmts.last(), Some(Stmt { kind: StmtKind::Return(_), .. })) {
            code.line("return tea.NO_RETURN;");
        }
        code.dedent().line("}");

        let dsl_params = list(api.params.iter().map(|p| ts_str(&p.name.name)));
        table.push(format!("{}: [{}, {dsl_params}]", ts_str(&api.name.name), ts_str(&method)));
    }
    code.dedent().line("}");
    code.blank();
    if table.is_empty() {
        code.line("export const API_METHODS: { [api: string]: [string, string[]] } = {};");
    } else {
        code.line("export const API_METHODS: { [api: string]: [string, string[]] } = {").indent();
        for row in table {
            code.line(format!("{row},"));
        }
        code.dedent().line("};");
    }
    Ok(code.finish())
}

fn ts_value(ty: &TypeExpr, v: &Value, module: &SemanticModule, used: &mut BTreeSet<String>) -> String {
    match (ty, v) {
        (_, Value::Null) => "null".into(),
        (_, Value::Bool(b)) => b.to_string(),
        (_, Value::Number(n)) => ts_num(*n),
        (_, Value::String(s)) => ts_str(s),
        (_, Value::Bytes(b)) => format!(
            "new Uint8Array([{}])",
            b.iter().map(u8::to_string).collect::<Vec<_>>().join(", ")
        ),
        (TypeExpr::Array(et), Value::Array(items)) => list(items.iter().map(|x| ts_value(et, x, module, used))),
        (_, Value::Array(items)) => list(items.iter().map(|x| ts_value(&TypeExpr::Any, x, module, used))),
        (ty, Value::Map(m)) => {
            if let TypeExpr::Named(n) = ty {
                used.insert(type_name(n));
            }
            let field_ty = |k: &str| match ty {
                TypeExpr::Named(n) => module
                    .models
                    .get(n)
                    .and_then(|model| model.field(k))
                    .map(|f| f.ty.clone())
                    .unwrap_or(TypeExpr::Any),
                TypeExpr::Map(_, vt) => vt.as_ref().clone(),
                _ => TypeExpr::Any,
            };
            let entries: Vec<_> = m
                .iter()
                .map(|(k, x)| format!("{}: {}", ts_str(k), ts_value(&field_ty(k), x, module, used)))
                .collect();
            format!("{{ {} }}", entries.join(", "))
        }
    }
}

impl Emitter for TypeScriptEmitter {
    fn target(&self) -> EmitterTarget {
        EmitterTarget {
            target_id: "typescript",
            file_extension: "ts",
            identifier_style: IdentStyle::CamelCase,
            type_name: ts_type,
            string_literal: ts_str,
        }
    }

    fn emit_module(&self, module: &SemanticModule) -> Result<FileSet, CodegenError> {
        let mut files = FileSet::new();
        files.insert("tea_core.ts", CORE);
        files.insert("models.ts", emit_models(module)?);
        files.insert("client.ts", emit_client(module)?);
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
        let method = Namer::new("typescript", IdentStyle::CamelCase, KEYWORDS).spell(&decl.name.name);
        let reserved: Vec<&str> = KEYWORDS.iter().chain(SAMPLE_RESERVED).copied().collect();
        let mut vars = Namer::new("typescript", IdentStyle::CamelCase, &reserved);
        let mut used = BTreeSet::new();
        let mut setup = Vec::new();
        let mut call_args = Vec::new();
        for p in &decl.params {
            let v = args.get(&p.name.name).cloned().unwrap_or(Value::Null);
            let literal = ts_value(&p.ty, &v, module, &mut used);
            if matches!(p.ty, TypeExpr::Named(_)) && !v.is_null() {
                let var = vars.declare(&p.name.name, p.name.span)?;
                setup.push(format!("const {var}: {} = {literal};", ts_type(&p.ty)));
                call_args.push(var);
            } else if v.is_null() {
                call_args.push(format!("null as unknown as {}", ts_type(&p.ty)));
            } else {
                call_args.push(literal);
            }
        }
        let mut code = Code::new("  ");
        code.line("import * as tea from \"./tea_core\";")
            .line("import { Client } from \"./client\";");
        if !used.is_empty() {
            code.line(format!(
                "import {{ {} }} from \"./models\";",
                used.into_iter().collect::<Vec<_>>().join(", ")
            ));
        }
        code.blank().line("async function main(): Promise<void> {").indent();
        code.line("const client = new Client(tea.defaultTransport());");
        for s in setup {
            code.line(s);
        }
        code.line(format!("const result = await client.{method}({});", call_args.join(", ")));
        code.line("console.log(tea.toJsonString(result ?? null));");
        code.dedent().line("}").blank().line("main();");
        Ok(code.finish())
    }
}

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use thiserror::Error;

use super::behavior::BehaviorRegistry;
use super::exchange::{HttpExchange, HttpResponse, RuntimeConfig};
use super::transport::{Transport, TransportError};
use crate::frontend::*;
use crate::num::format_number;
use crate::semantics::{validate_type, Rule, SemanticModule, ValidationReport, Violation};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("null dereference reading '{path}'")]
    NullDereference { path: String },
    #[error("cannot read '{field}' from a {kind} value")]
    InvalidAccess { field: String, kind: &'static str },
    #[error("null value in template string")]
    NullInTemplate,
    #[error("type error: {0}")]
    Type(String),
    #[error("unbound variable '{0}'")]
    UnboundVariable(String),
    #[error("behavior '@{0}' has no implementation")]
    UnboundBehavior(String),
    #[error("'{name}' failed: {message}")]
    CallFailed { name: String, message: String },
    #[error("returns block finished without returning a value")]
    MissingReturn,
    #[error("the request cannot be modified in the returns block")]
    RequestReadOnly,
    #[error("'__response' is not available before the request is sent")]
    NoResponse,
}

impl EvalError {
    /// Stable kebab-case code, shared with generated SDK cores.
    pub fn kind(&self) -> &'static str {
        match self {
            EvalError::NullDereference { .. } => "null-dereference",
            EvalError::InvalidAccess { .. } => "invalid-access",
            EvalError::NullInTemplate => "null-in-template",
            EvalError::Type(_) => "type",
            EvalError::UnboundVariable(_) => "unbound-variable",
            EvalError::UnboundBehavior(_) => "unbound-behavior",
            EvalError::CallFailed { .. } => "call-failed",
            EvalError::MissingReturn => "missing-return",
            EvalError::RequestReadOnly => "request-read-only",
            EvalError::NoResponse => "no-response",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("unknown api '{0}'")]
    UnknownApi(String),
    #[error("module has errors and cannot be executed")]
    InvalidModule,
    #[error("validation failed: {0}")]
    ValidationFailed(ValidationReport),
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("{source} (after {attempts} attempt(s))")]
    Transport {
        attempts: u32,
        source: TransportError,
    },
}

impl RuntimeError {
    pub fn kind(&self) -> &'static str {
        match self {
            RuntimeError::UnknownApi(_) => "unknown-api",
            RuntimeError::InvalidModule => "invalid-module",
            RuntimeError::ValidationFailed(_) => "validation",
            RuntimeError::Eval(_) => "eval",
            RuntimeError::Transport { .. } => "transport",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Request,
    Returns,
}

/// Variable scopes plus the exchange being built or decoded.
pub struct Environment<'r> {
    registry: &'r BehaviorRegistry,
    scopes: Vec<HashMap<String, Value>>,
    pub exchange: HttpExchange,
    phase: Phase,
}

impl<'r> Environment<'r> {
    pub fn new(registry: &'r BehaviorRegistry, config: &RuntimeConfig) -> Self {
        Environment {
            registry,
            scopes: vec![HashMap::new()],
            exchange: HttpExchange::new(config),
            phase: Phase::Request,
        }
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Value) {
        self.scopes
            .last_mut()
            .expect("at least one scope")
            .insert(name.into(), value);
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn assign_local(&mut self, name: &str, value: Value) -> Result<(), EvalError> {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = value;
                return Ok(());
            }
        }
        Err(EvalError::UnboundVariable(name.to_string()))
    }

    /// Switches to returns-block evaluation with `response` bound.
    pub fn enter_returns(&mut self, response: HttpResponse) {
        self.exchange.response = Some(response);
        self.phase = Phase::Returns;
    }
}

enum Flow {
    Normal,
    Return(Value),
}

/// Evaluates an expression strictly, left to right. `&&` and `||`
/// short-circuit and require booleans; `+` adds numbers and otherwise
/// concatenates the text of strings, numbers and booleans.
pub fn eval_expr(expr: &Expr, env: &mut Environment<'_>) -> Result<Value, EvalError> {
    match &expr.kind {
        ExprKind::StringLit(s) => Ok(Value::String(s.clone())),
        ExprKind::NumberLit(n) => Ok(Value::Number(*n)),
        ExprKind::BoolLit(b) => Ok(Value::Bool(*b)),
        ExprKind::NullLit => Ok(Value::Null),
        ExprKind::TemplateString(parts) => {
            let mut out = String::new();
            for p in parts {
                match p {
                    TemplatePart::Lit(s) => out.push_str(s),
                    TemplatePart::Expr(e) => match eval_expr(e, env)? {
                        Value::String(s) => out.push_str(&s),
                        Value::Number(n) => out.push_str(&format_number(n)),
                        Value::Bool(b) => out.push_str(if b { "true" } else { "false" }),
                        Value::Null => return Err(EvalError::NullInTemplate),
                        other => {
                            return Err(EvalError::Type(format!(
                                "cannot interpolate a {} value",
                                other.kind_name()
                            )))
                        }
                    },
                }
            }
            Ok(Value::String(out))
        }
        ExprKind::MapLit(entries) => {
            let mut map = BTreeMap::new();
            for (k, v) in entries {
                let v = eval_expr(v, env)?;
                map.insert(k.name.clone(), v);
            }
            Ok(Value::Map(map))
        }
        ExprKind::PathAccess(segments) => read_path(segments, env),
        ExprKind::Call {
            module,
            method,
            args,
        } => {
            let args = eval_args(args, env)?;
            call_builtin(&module.name, &method.name, &args)
        }
        ExprKind::BehaviorCall { name, args } => {
            let args = eval_args(args, env)?;
            let f = env
                .registry
                .get(&name.name)
                .ok_or_else(|| EvalError::UnboundBehavior(name.name.clone()))?;
            f(&args).map_err(|message| EvalError::CallFailed {
                name: format!("@{}", name.name),
                message,
            })
        }
        ExprKind::BinaryOp { op, lhs, rhs } => match op {
            BinOp::And | BinOp::Or => {
                let l = expect_bool(eval_expr(lhs, env)?, *op)?;
                if (*op == BinOp::And) != l {
                    return Ok(Value::Bool(l));
                }
                Ok(Value::Bool(expect_bool(eval_expr(rhs, env)?, *op)?))
            }
            BinOp::Eq | BinOp::Ne => {
                let l = eval_expr(lhs, env)?;
                let r = eval_expr(rhs, env)?;
                Ok(Value::Bool((l == r) == (*op == BinOp::Eq)))
            }
            BinOp::Add => {
                let l = eval_expr(lhs, env)?;
                let r = eval_expr(rhs, env)?;
                add(l, r)
            }
        },
    }
}

fn expect_bool(v: Value, op: BinOp) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::Type(format!(
            "'{}' needs boolean operands, found {}",
            op.symbol(),
            other.kind_name()
        ))),
    }
}

fn add(l: Value, r: Value) -> Result<Value, EvalError> {
    let text = |v: &Value| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(format_number(*n)),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    };
    match (&l, &r) {
        (Value::Number(a), Value::Number(b)) => Ok(Value::Number(a + b)),
        (Value::String(_), _) | (_, Value::String(_)) => match (text(&l), text(&r)) {
            (Some(a), Some(b)) => Ok(Value::String(a + &b)),
            _ => Err(EvalError::Type(format!(
                "cannot apply '+' to {} and {}",
                l.kind_name(),
                r.kind_name()
            ))),
        },
        _ => Err(EvalError::Type(format!(
            "cannot apply '+' to {} and {}",
            l.kind_name(),
            r.kind_name()
        ))),
    }
}

fn eval_args(args: &[Expr], env: &mut Environment<'_>) -> Result<Vec<Value>, EvalError> {
    args.iter().map(|a| eval_expr(a, env)).collect()
}

fn call_builtin(module: &str, method: &str, args: &[Value]) -> Result<Value, EvalError> {
    let name = format!("{module}.{method}");
    let fail = |message: String| EvalError::CallFailed {
        name: name.clone(),
        message,
    };
    let bytes = |v: &Value| -> Result<Vec<u8>, EvalError> {
        match v {
            Value::Bytes(b) => Ok(b.clone()),
            Value::String(s) => Ok(s.clone().into_bytes()),
            other => Err(fail(format!("expected readable, found {}", other.kind_name()))),
        }
    };
    match (module, method, args) {
        ("Util", "readAsJSON", [v]) => serde_json::from_slice::<serde_json::Value>(&bytes(v)?)
            .map(Value::from)
            .map_err(|e| fail(e.to_string())),
        ("Util", "readAsString", [v]) => Ok(Value::String(String::from_utf8_lossy(&bytes(v)?).into_owned())),
        ("Util", "toJSONString", [v]) => Ok(Value::String(v.to_json_string())),
        _ => Err(fail("no such builtin function".into())),
    }
}

fn request_field(ex: &HttpExchange, field: &str) -> Option<Value> {
    let strings = |m: &BTreeMap<String, String>| {
        Value::Map(m.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
    };
    Some(match field {
        "protocol" => Value::String(ex.protocol.clone()),
        "port" => Value::Number(ex.port as f64),
        "host" => Value::String(ex.host.clone()),
        "method" => Value::String(ex.request.method.clone()),
        "pathname" => Value::String(ex.request.pathname.clone()),
        "query" => strings(&ex.request.query),
        "headers" => strings(&ex.request.headers),
        "body" => Value::Bytes(ex.request.body.clone()),
        _ => return None,
    })
}

fn response_field(resp: &HttpResponse, field: &str) -> Option<Value> {
    Some(match field {
        "statusCode" => Value::Number(resp.status_code as f64),
        "statusMessage" => Value::String(resp.status_message.clone()),
        "headers" => Value::Map(
            resp.headers
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        ),
        "body" => Value::Bytes(resp.body.clone()),
        _ => return None,
    })
}

fn read_path(segments: &[Ident], env: &Environment<'_>) -> Result<Value, EvalError> {
    let head = segments[0].name.as_str();
    let (mut current, rest) = match head {
        REQUEST | RESPONSE if segments.len() < 2 => {
            return Err(EvalError::Type(format!("'{head}' is not a value")))
        }
        REQUEST => {
            let f = &segments[1].name;
            let v = request_field(&env.exchange, f).ok_or_else(|| EvalError::InvalidAccess {
                field: f.clone(),
                kind: "request",
            })?;
            (v, &segments[2..])
        }
        RESPONSE => {
            let resp = env.exchange.response.as_ref().ok_or(EvalError::NoResponse)?;
            let f = &segments[1].name;
            let v = response_field(resp, f).ok_or_else(|| EvalError::InvalidAccess {
                field: f.clone(),
                kind: "response",
            })?;
            (v, &segments[2..])
        }
        name => (
            env.lookup(name)
                .cloned()
                .ok_or_else(|| EvalError::UnboundVariable(name.to_string()))?,
            &segments[1..],
        ),
    };
    let consumed = segments.len() - rest.len();
    for (i, seg) in rest.iter().enumerate() {
        current = match current {
            Value::Map(mut m) => m.remove(&seg.name).unwrap_or(Value::Null),
            Value::Null => {
                return Err(EvalError::NullDereference {
                    path: join_path(&segments[..consumed + i + 1]),
                })
            }
            other => {
                return Err(EvalError::InvalidAccess {
                    field: seg.name.clone(),
                    kind: other.kind_name(),
                })
            }
        };
    }
    Ok(current)
}

fn string_value(field: &str, v: Value) -> Result<String, EvalError> {
    match v {
        Value::String(s) => Ok(s),
        other => Err(EvalError::Type(format!(
            "request {field} must be a string, found {}",
            other.kind_name()
        ))),
    }
}

fn string_map(field: &str, v: Value) -> Result<BTreeMap<String, String>, EvalError> {
    match v {
        Value::Map(m) => m
            .into_iter()
            .map(|(k, v)| Ok((k, string_value(field, v)?)))
            .collect(),
        other => Err(EvalError::Type(format!(
            "request {field} must be a map of strings, found {}",
            other.kind_name()
        ))),
    }
}

fn write_request(ex: &mut HttpExchange, path: &[Ident], value: Value) -> Result<(), EvalError> {
    let field = path[0].name.as_str();
    let invalid = || EvalError::InvalidAccess {
        field: join_path(path),
        kind: "request",
    };
    match (field, &path[1..]) {
        ("protocol", []) => {
            let p = string_value(field, value)?;
            if p != "http" && p != "https" {
                return Err(EvalError::Type(format!("protocol must be http or https, found '{p}'")));
            }
            ex.protocol = p;
        }
        ("port", []) => match value {
            Value::Number(n) if n.fract() == 0.0 && (1.0..=65535.0).contains(&n) => ex.port = n as u16,
            other => {
                return Err(EvalError::Type(format!(
                    "port must be an integer in 1-65535, found {other}"
                )))
            }
        },
        ("host", []) => ex.host = string_value(field, value)?,
        ("method", []) => ex.request.method = string_value(field, value)?,
        ("pathname", []) => ex.request.pathname = string_value(field, value)?,
        ("query", []) => ex.request.query = string_map(field, value)?,
        ("headers", []) => ex.request.headers = string_map(field, value)?,
        ("query", [key]) => {
            let v = string_value(field, value)?;
            ex.request.query.insert(key.name.clone(), v);
        }
        ("headers", [key]) => {
            let v = string_value(field, value)?;
            ex.request.headers.insert(key.name.clone(), v);
        }
        ("body", []) => {
            ex.request.body = match value {
                Value::Bytes(b) => b,
                Value::String(s) => s.into_bytes(),
                other => {
                    return Err(EvalError::Type(format!(
                        "body must be readable, found {}",
                        other.kind_name()
                    )))
                }
            }
        }
        _ => return Err(invalid()),
    }
    Ok(())
}

fn exec_block(stmts: &[Stmt], env: &mut Environment<'_>) -> Result<Flow, EvalError> {
    env.scopes.push(HashMap::new());
    let result = exec_stmts(stmts, env);
    env.scopes.pop();
    result
}

fn exec_stmts(stmts: &[Stmt], env: &mut Environment<'_>) -> Result<Flow, EvalError> {
    for stmt in stmts {
        match &stmt.kind {
            StmtKind::VarDecl { name, init } => {
                let v = eval_expr(init, env)?;
                env.bind(name.name.clone(), v);
            }
            StmtKind::Assign { target, value } => {
                let v = eval_expr(value, env)?;
                match target[0].name.as_str() {
                    REQUEST => {
                        if env.phase == Phase::Returns {
                            return Err(EvalError::RequestReadOnly);
                        }
                        if target.len() < 2 {
                            return Err(EvalError::Type("cannot assign the request record".into()));
                        }
                        write_request(&mut env.exchange, &target[1..], v)?;
                    }
                    RESPONSE => return Err(EvalError::Type("'__response' is read-only".into())),
                    name if target.len() == 1 => env.assign_local(name, v)?,
                    _ => {
                        return Err(EvalError::Type(
                            "only request fields can be assigned through a path".into(),
                        ))
                    }
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_ifs,
                else_block,
            } => {
                let mut chosen = None;
                if condition(cond, env)? {
                    chosen = Some(then_block);
                } else {
                    for (c, b) in else_ifs {
                        if condition(c, env)? {
                            chosen = Some(b);
                            break;
                        }
                    }
                    if chosen.is_none() {
                        chosen = else_block.as_ref();
                    }
                }
                if let Some(block) = chosen {
                    if let Flow::Return(v) = exec_block(&block.stmts, env)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::Return(e) => return Ok(Flow::Return(eval_expr(e, env)?)),
            StmtKind::Expr(e) => {
                eval_expr(e, env)?;
            }
        }
    }
    Ok(Flow::Normal)
}

fn condition(cond: &Expr, env: &mut Environment<'_>) -> Result<bool, EvalError> {
    match eval_expr(cond, env)? {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::Type(format!(
            "condition must be boolean, found {}",
            other.kind_name()
        ))),
    }
}

fn prefixed(report: ValidationReport, prefix: &str) -> Vec<Violation> {
    report
        .violations
        .into_iter()
        .map(|mut v| {
            v.path = if v.path.is_empty() {
                prefix.to_string()
            } else {
                format!("{prefix}.{}", v.path)
            };
            v
        })
        .collect()
}

fn lookup_api<'m>(module: &'m SemanticModule, api: &str) -> Result<&'m ApiDecl, RuntimeError> {
    if module.has_errors() {
        return Err(RuntimeError::InvalidModule);
    }
    module
        .apis
        .get(api)
        .ok_or_else(|| RuntimeError::UnknownApi(api.to_string()))
}

/// Validates arguments against the declared parameter types. Missing or
/// null arguments are reported as `missing-required` unless typed `any`.
pub fn validate_args(
    module: &SemanticModule,
    decl: &ApiDecl,
    args: &BTreeMap<String, Value>,
) -> Result<(), ValidationReport> {
    let mut violations = Vec::new();
    for p in &decl.params {
        let name = &p.name.name;
        match args.get(name) {
            None | Some(Value::Null) if p.ty != TypeExpr::Any => violations.push(Violation {
                path: name.clone(),
                rule: Rule::MissingRequired,
                detail: "required argument is missing".into(),
            }),
            None | Some(Value::Null) => {}
            Some(v) => violations.extend(prefixed(validate_type(&p.ty, v, module), name)),
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport {
            ok: false,
            violations,
        })
    }
}

fn check_args(
    module: &SemanticModule,
    decl: &ApiDecl,
    args: &BTreeMap<String, Value>,
) -> Result<(), RuntimeError> {
    validate_args(module, decl, args).map_err(RuntimeError::ValidationFailed)
}

fn bind_params<'r>(
    decl: &ApiDecl,
    args: &BTreeMap<String, Value>,
    registry: &'r BehaviorRegistry,
    config: &RuntimeConfig,
) -> Environment<'r> {
    let mut env = Environment::new(registry, config);
    for p in &decl.params {
        env.bind(
            p.name.name.clone(),
            args.get(&p.name.name).cloned().unwrap_or(Value::Null),
        );
    }
    env
}

/// Runs only the request block of `api` and returns the populated exchange.
/// No transport I/O happens; unset fields keep their configured defaults.
pub fn build_request(
    module: &SemanticModule,
    api: &str,
    args: &BTreeMap<String, Value>,
    config: &RuntimeConfig,
) -> Result<HttpExchange, RuntimeError> {
    build_request_with(module, api, args, &BehaviorRegistry::default(), config)
}

pub fn build_request_with(
    module: &SemanticModule,
    api: &str,
    args: &BTreeMap<String, Value>,
    registry: &BehaviorRegistry,
    config: &RuntimeConfig,
) -> Result<HttpExchange, RuntimeError> {
    let decl = lookup_api(module, api)?;
    check_args(module, decl, args)?;
    let mut env = bind_params(decl, args, registry, config);
    exec_block(&decl.request_block.stmts, &mut env)?;
    Ok(env.exchange)
}

/// Result of a full invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub value: Value,
    /// The exchange as sent, with the final response attached.
    pub exchange: HttpExchange,
    pub attempts: u32,
}

/// Builds the request, sends it (retrying transport failures up to
/// `config.retry_times` extra times with a fixed `backoff_ms` pause),
/// evaluates the returns block and checks the result against the declared
/// return type.
pub fn invoke(
    module: &SemanticModule,
    api: &str,
    args: &BTreeMap<String, Value>,
    transport: &dyn Transport,
    registry: &BehaviorRegistry,
    config: &RuntimeConfig,
) -> Result<Value, RuntimeError> {
    invoke_detailed(module, api, args, transport, registry, config).map(|i| i.value)
}

pub fn invoke_detailed(
    module: &SemanticModule,
    api: &str,
    args: &BTreeMap<String, Value>,
    transport: &dyn Transport,
    registry: &BehaviorRegistry,
    config: &RuntimeConfig,
) -> Result<Invocation, RuntimeError> {
    let decl = lookup_api(module, api)?;
    let mut unbound = None;
    for block in [&decl.request_block, &decl.returns_block] {
        walk_exprs(&block.stmts, &mut |e| {
            if let ExprKind::BehaviorCall { name, .. } = &e.kind {
                if unbound.is_none() && !registry.contains(&name.name) {
                    unbound = Some(name.name.clone());
                }
            }
        });
    }
    if let Some(name) = unbound {
        return Err(EvalError::UnboundBehavior(name).into());
    }
    check_args(module, decl, args)?;
    let mut env = bind_params(decl, args, registry, config);
    exec_block(&decl.request_block.stmts, &mut env)?;

    let timeout = Duration::from_millis(config.timeout_ms);
    let max_attempts = config.retry_times.saturating_add(1);
    let mut attempts = 0;
    let response = loop {
        attempts += 1;
        match transport.send(&env.exchange, timeout) {
            Ok(r) => break r,
            Err(source) if attempts >= max_attempts => {
                return Err(RuntimeError::Transport { attempts, source })
            }
            Err(_) => std::thread::sleep(Duration::from_millis(config.backoff_ms)),
        }
    };

    let sent = env.exchange.clone();
    let mut env = bind_params(decl, args, registry, config);
    env.exchange = sent.clone();
    env.enter_returns(response);
    let returned = match exec_block(&decl.returns_block.stmts, &mut env)? {
        Flow::Return(v) => Some(v),
        Flow::Normal => None,
    };
    debug_assert_eq!(env.exchange.request, sent.request, "returns block mutated the request");

    let value = match (&decl.return_type, returned) {
        (TypeExpr::Void, _) => Value::Null,
        (_, None) => return Err(EvalError::MissingReturn.into()),
        (TypeExpr::Any, Some(v)) => v,
        (ty, Some(v)) => {
            let report = validate_type(ty, &v, module);
            if !report.ok {
                return Err(RuntimeError::ValidationFailed(report));
            }
            conform(ty, v, module)
        }
    };
    Ok(Invocation {
        value,
        exchange: env.exchange,
        attempts,
    })
}

/// Drops keys a model does not declare, recursively. `value` must already
/// have passed validation against `ty`.
pub fn conform(ty: &TypeExpr, value: Value, module: &SemanticModule) -> Value {
    match (ty, value) {
        (TypeExpr::Named(name), Value::Map(mut m)) => {
            let Some(model) = module.models.get(name) else {
                return Value::Map(m);
            };
            let mut out = BTreeMap::new();
            for f in &model.fields {
                if let Some(v) = m.remove(&f.name.name) {
                    if !v.is_null() {
                        out.insert(f.name.name.clone(), conform(&f.ty, v, module));
                    }
                }
            }
            Value::Map(out)
        }
        (TypeExpr::Map(_, vt), Value::Map(m)) => Value::Map(
            m.into_iter()
                .map(|(k, v)| (k, conform(vt, v, module)))
                .collect(),
        ),
        (TypeExpr::Array(et), Value::Array(items)) => {
            Value::Array(items.into_iter().map(|v| conform(et, v, module)).collect())
        }
        (TypeExpr::Readable, Value::String(s)) => Value::Bytes(s.into_bytes()),
        (_, v) => v,
    }
}

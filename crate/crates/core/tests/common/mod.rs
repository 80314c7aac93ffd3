#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;
use serde_json::{json, Value as Json};

use teaforge_core::codegen::{emit, find_target};
use teaforge_core::runtime::{self, BehaviorRegistry, HttpExchange, MockTransport, RuntimeConfig, RuntimeError};
use teaforge_core::semantics::{analyze, SemanticModule};
use teaforge_core::value::Value;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn load_module(path: &Path) -> SemanticModule {
    let src = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let tree = teaforge_core::parse_source(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let module = analyze(&tree);
    let errors: Vec<_> = module.errors().map(|d| d.render(&path.display().to_string())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
    module
}

pub fn have(cmd: &str) -> bool {
    Command::new(cmd)
        .arg("--version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

#[derive(Debug, Clone, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub api: String,
    #[serde(default)]
    pub args: serde_json::Map<String, Json>,
    #[serde(default)]
    pub retries: u32,
    pub rules: Json,
}

pub fn load_scenarios(path: &Path) -> Vec<Scenario> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every `<name>.tea` in `dir` paired with `<name>.scenarios.json`.
pub fn corpus(dir: &Path) -> Vec<(String, SemanticModule, Vec<Scenario>)> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "tea").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let module = load_module(&dir.join(format!("{n}.tea")));
            let scenarios = load_scenarios(&dir.join(format!("{n}.scenarios.json")));
            (n, module, scenarios)
        })
        .collect()
}

/// Native behaviors the corpus binds; the target harnesses define the same
/// three functions. `@missing` is deliberately left unbound.
pub fn registry() -> BehaviorRegistry {
    let mut r = BehaviorRegistry::default();
    r.bind("sign", |args| match args {
        [Value::String(s)] => Ok(Value::String(s.chars().rev().collect())),
        _ => Err("expected a string".into()),
    });
    r.bind("upper", |args| match args {
        [Value::String(s)] => Ok(Value::String(s.to_uppercase())),
        _ => Err("expected a string".into()),
    });
    r.bind("explode", |_| Err("boom".into()));
    r
}

fn request_record(ex: &HttpExchange) -> Json {
    json!({
        "protocol": ex.protocol,
        "host": ex.host,
        "port": ex.port,
        "method": ex.request.method,
        "pathname": ex.request.pathname,
        "query": ex.request.query,
        "headers": ex.request.headers,
        "body": String::from_utf8_lossy(&ex.request.body),
    })
}

fn error_record(e: &RuntimeError) -> Json {
    match e {
        RuntimeError::ValidationFailed(report) => json!({
            "kind": "validation",
            "violations": report.violations.iter().map(|v| json!({
                "path": v.path, "rule": v.rule.as_str(), "detail": v.detail,
            })).collect::<Vec<_>>(),
        }),
        RuntimeError::Eval(e) => json!({"kind": "eval", "code": e.kind()}),
        RuntimeError::Transport { attempts, .. } => json!({"kind": "transport", "attempts": attempts}),
        other => json!({"kind": other.kind()}),
    }
}

/// Observable outcome of one scenario under the reference interpreter:
/// the last request sent, the number of attempts and the decoded result.
pub fn reference_outcome(module: &SemanticModule, s: &Scenario) -> Json {
    let transport = MockTransport::from_json(&s.rules.to_string()).expect("valid rules");
    let config = RuntimeConfig::with_retries(s.retries, 0);
    let args: BTreeMap<String, Value> = s.args.iter().map(|(k, v)| (k.clone(), Value::from(v.clone()))).collect();
    let result = runtime::invoke(module, &s.api, &args, &transport, &registry(), &config);
    let sent = transport.requests();
    json!({
        "name": s.name,
        "attempts": sent.len(),
        "request": sent.last().map(request_record),
        "result": match result {
            Ok(v) => json!({"ok": v.to_json()}),
            Err(e) => json!({"error": error_record(&e)}),
        },
    })
}

const PY_HARNESS: &str = r#"
import json, sys
sys.path.insert(0, sys.argv[1])
import tea_core
import client as gen


def explode(s):
    raise ValueError("boom")


OVERRIDES = {"sign": lambda s: s[::-1], "upper": lambda s: s.upper(), "explode": explode}


def request_record(r):
    return {"protocol": r.protocol, "host": r.host, "port": r.port, "method": r.method,
            "pathname": r.pathname, "query": r.query, "headers": r.headers,
            "body": r.body.decode("utf-8", "replace")}


def error_record(e):
    if isinstance(e, tea_core.ValidationFailed):
        return {"kind": "validation", "violations": e.violations}
    if isinstance(e, tea_core.EvalError):
        return {"kind": "eval", "code": e.code}
    if isinstance(e, tea_core.TransportError):
        return {"kind": "transport", "attempts": e.attempts}
    return {"kind": e.kind}


out = []
with open(sys.argv[2], encoding="utf-8") as f:
    cases = json.load(f)
for case in cases:
    transport = tea_core.MockTransport(case["rules"])
    config = tea_core.Config(retry_times=case.get("retries", 0), backoff_ms=0)
    client = gen.Client(transport, config, gen.Behaviors(OVERRIDES))
    method, params = gen.API_METHODS[case["api"]]
    args = case.get("args", {})
    try:
        value = getattr(client, method)(*[args.get(p) for p in params])
        result = {"ok": tea_core.to_json(value)}
    except tea_core.TeaError as e:
        result = {"error": error_record(e)}
    sent = transport.requests
    out.append({"name": case["name"], "attempts": len(sent),
                "request": request_record(sent[-1]) if sent else None, "result": result})
print(json.dumps(out, ensure_ascii=False))
"#;

const JS_HARNESS: &str = r#"
const fs = require("fs");
const path = require("path");
const dir = process.argv[2];
const tea = require(path.join(dir, "tea_core.js"));
const gen = require(path.join(dir, "client.js"));
const decoder = new TextDecoder();
const overrides = {
  sign: (s) => Array.from(s).reverse().join(""),
  upper: (s) => s.toUpperCase(),
  explode: () => { throw new Error("boom"); },
};
const requestRecord = (r) => ({
  protocol: r.protocol, host: r.host, port: r.port, method: r.method, pathname: r.pathname,
  query: r.query, headers: r.headers, body: decoder.decode(r.body),
});
const errorRecord = (e) => {
  if (e instanceof tea.ValidationFailed) return { kind: "validation", violations: e.violations };
  if (e instanceof tea.EvalError) return { kind: "eval", code: e.code };
  if (e instanceof tea.TransportError) return { kind: "transport", attempts: e.attempts };
  if (e instanceof tea.TeaError) return { kind: e.kind };
  throw e;
};
(async () => {
  const out = [];
  for (const c of JSON.parse(fs.readFileSync(process.argv[3], "utf8"))) {
    const transport = new tea.MockTransport(c.rules);
    const config = new tea.Config({ retryTimes: c.retries ?? 0, backoffMs: 0 });
    const client = new gen.Client(transport, config, new gen.Behaviors(overrides));
    const [method, params] = gen.API_METHODS[c.api];
    const args = c.args ?? {};
    let result;
    try {
      const value = await client[method](...params.map((p) => (p in args ? args[p] : null)));
      result = { ok: tea.toJson(value ?? null) };
    } catch (e) {
      result = { error: errorRecord(e) };
    }
    const sent = transport.requests;
    out.push({ name: c.name, attempts: sent.length,
      request: sent.length ? requestRecord(sent[sent.length - 1]) : null, result });
  }
  console.log(JSON.stringify(out));
})();
"#;

fn write_cases(dir: &Path, scenarios: &[Scenario]) -> PathBuf {
    let cases: Vec<Json> = scenarios
        .iter()
        .map(|s| json!({"name": s.name, "api": s.api, "args": s.args, "retries": s.retries, "rules": s.rules}))
        .collect();
    let path = dir.join("cases.json");
    std::fs::write(&path, serde_json::to_string(&cases).unwrap()).unwrap();
    path
}

fn run(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn");
    assert!(
        out.status.success(),
        "{cmd:?} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Runs every scenario through the generated Python client.
pub fn python_outcomes(module: &SemanticModule, scenarios: &[Scenario]) -> Vec<Json> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sdk");
    emit(module, &find_target("python").unwrap()).unwrap().write_to(&out).unwrap();
    let cases = write_cases(dir.path(), scenarios);
    let harness = dir.path().join("harness.py");
    std::fs::write(&harness, PY_HARNESS).unwrap();
    let stdout = run(Command::new("python3").arg(&harness).arg(&out).arg(&cases));
    serde_json::from_str(&stdout).unwrap()
}

/// Compiles the generated TypeScript client with `tsc` and runs every
/// scenario under node.
pub fn typescript_outcomes(module: &SemanticModule, scenarios: &[Scenario]) -> Vec<Json> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sdk");
    let files = emit(module, &find_target("typescript").unwrap()).unwrap();
    files.write_to(&out).unwrap();
    let js = dir.path().join("js");
    let mut tsc = Command::new("tsc");
    tsc.args(["--strict", "--target", "es2020", "--module", "commonjs", "--lib", "es2020,dom", "--outDir"])
        .arg(&js);
    for p in files.paths() {
        tsc.arg(out.join(p));
    }
    run(&mut tsc);
    let cases = write_cases(dir.path(), scenarios);
    let harness = dir.path().join("harness.js");
    std::fs::write(&harness, JS_HARNESS).unwrap();
    let stdout = run(Command::new("node").arg(&harness).arg(&js).arg(&cases));
    serde_json::from_str(&stdout).unwrap()
}

/// Normalizes numbers so `30`, `30.0` and `3e1` compare equal.
pub fn canonical(v: &Json) -> Json {
    match v {
        Json::Number(n) => {
            let f = n.as_f64().unwrap();
            if f.fract() == 0.0 && f.abs() < 1e15 {
                json!(f as i64)
            } else {
                json!(f)
            }
        }
        Json::Array(a) => Json::Array(a.iter().map(canonical).collect()),
        Json::Object(m) => Json::Object(m.iter().map(|(k, v)| (k.clone(), canonical(v))).collect()),
        other => other.clone(),
    }
}

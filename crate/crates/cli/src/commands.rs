use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value as Json};

use teaforge_core::analyzer::{self, ApiDocSpec};
use teaforge_core::codegen::{self, CodegenError};
use teaforge_core::frontend::{dump_ast, SyntaxTree};
use teaforge_core::runtime::{self, BehaviorRegistry, MockTransport, RuntimeConfig, RuntimeError};
use teaforge_core::semantics::{analyze, SemanticModule, ValidationReport};
use teaforge_core::value::Value;

use crate::report;
use crate::{CliError, Format};

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn print_json(v: &Json) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn syntax_diagnostics(file: &str, err: &teaforge_core::frontend::FrontendError) -> Vec<Json> {
    err.entries()
        .into_iter()
        .map(|(pos, message)| {
            json!({
                "file": file, "line": pos.line, "column": pos.column,
                "severity": "error", "code": "syntax", "message": message,
            })
        })
        .collect()
}

fn parse_file(path: &Path) -> Result<(String, Result<SyntaxTree, Vec<Json>>), CliError> {
    let src = read(path)?;
    let name = path.display().to_string();
    let tree = teaforge_core::parse_source(&src).map_err(|e| syntax_diagnostics(&name, &e));
    Ok((name, tree))
}

fn report_syntax(diags: &[Json]) {
    for d in diags {
        report::error(&format!("{}:{}:{}: {}", d["file"].as_str().unwrap_or(""), d["line"], d["column"], d["message"].as_str().unwrap_or("")));
    }
}

/// Loads a module for commands that need a clean one: syntax and semantic
/// errors are reported and turn into exit status 1; warnings are printed.
fn load(path: &Path) -> Result<SemanticModule, CliError> {
    let (name, tree) = parse_file(path)?;
    let tree = tree.map_err(|d| {
        report_syntax(&d);
        CliError::Failed
    })?;
    let module = analyze(&tree);
    for d in &module.diagnostics {
        report::diagnostic(&name, d);
    }
    if module.has_errors() {
        return Err(CliError::Failed);
    }
    Ok(module)
}

pub fn check(path: &Path, format: Format) -> Result<(), CliError> {
    let (name, tree) = parse_file(path)?;
    let (diags, failed) = match tree {
        Err(d) => {
            if format == Format::Text {
                report_syntax(&d);
            }
            (d, true)
        }
        Ok(tree) => {
            let module = analyze(&tree);
            if format == Format::Text {
                for d in &module.diagnostics {
                    report::diagnostic(&name, d);
                }
            }
            let diags = module
                .diagnostics
                .iter()
                .map(|d| {
                    json!({
                        "file": name, "line": d.span.start.line, "column": d.span.start.column,
                        "severity": d.severity, "code": d.code, "message": d.message,
                    })
                })
                .collect();
            (diags, module.has_errors())
        }
    };
    if format == Format::Json {
        print_json(&json!({"file": name, "ok": !failed, "diagnostics": diags}));
    }
    if failed {
        Err(CliError::Failed)
    } else {
        Ok(())
    }
}

pub fn ast(path: &Path, format: Format) -> Result<(), CliError> {
    let (name, tree) = parse_file(path)?;
    let tree = tree.map_err(|d| {
        report_syntax(&d);
        CliError::Failed
    })?;
    let dump = dump_ast(&tree);
    match format {
        Format::Json => print_json(&json!({"file": name, "ast": dump})),
        _ => println!("{dump}"),
    }
    Ok(())
}

fn target(id: &str) -> Result<codegen::EmitterTarget, CliError> {
    codegen::find_target(id).ok_or_else(|| {
        let known: Vec<_> = codegen::list_targets().iter().map(|t| t.target_id).collect();
        CliError::Usage(format!("unknown target '{id}' (available: {})", known.join(", ")))
    })
}

fn codegen_error(e: CodegenError) -> CliError {
    match e {
        CodegenError::UnknownApi(_) | CodegenError::UnknownTarget(_) => CliError::Usage(e.to_string()),
        CodegenError::InvalidArgs(report) => {
            report_violations(&report);
            CliError::Failure("invalid arguments".into())
        }
        other => CliError::Failure(other.to_string()),
    }
}

pub fn gen(path: &Path, target_id: &str, out: &Path, format: Format) -> Result<(), CliError> {
    let t = target(target_id)?;
    let module = load(path)?;
    let files = codegen::emit(&module, &t).map_err(codegen_error)?;
    files.write_to(out).map_err(|e| CliError::io(out, e))?;
    match format {
        Format::Json => print!("{}", files.manifest()),
        _ => {
            for p in files.paths().chain(["fileset.json"]) {
                println!("{}", out.join(p).display());
            }
        }
    }
    Ok(())
}

/// `--args`: inline JSON, or `@path`.
fn parse_args(text: &str) -> Result<BTreeMap<String, Value>, CliError> {
    let text = match text.strip_prefix('@') {
        Some(p) => read(Path::new(p))?,
        None => text.to_string(),
    };
    let json: Json = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("--args is not valid JSON: {e}")))?;
    match Value::from(json) {
        Value::Map(m) => Ok(m),
        other => Err(CliError::Usage(format!("--args must be a JSON object, found {}", other.kind_name()))),
    }
}

fn report_violations(report: &ValidationReport) {
    for v in &report.violations {
        let path = if v.path.is_empty() { "<value>" } else { v.path.as_str() };
        report::error(&format!("{path}: {} ({})", v.rule, v.detail));
    }
}

pub fn sample(path: &Path, api: &str, args: &str, target_id: &str, format: Format) -> Result<(), CliError> {
    let t = target(target_id)?;
    let args = parse_args(args)?;
    let module = load(path)?;
    let code = codegen::emit_code_sample(&module, api, &args, &t).map_err(codegen_error)?;
    match format {
        Format::Json => print_json(&json!({"target": t.target_id, "api": api, "code": code})),
        _ => print!("{code}"),
    }
    Ok(())
}

pub fn invoke(
    path: &Path,
    api: &str,
    args: &str,
    mock: &Path,
    retries: u32,
    backoff_ms: u64,
    format: Format,
) -> Result<(), CliError> {
    let args = parse_args(args)?;
    let module = load(path)?;
    let transport = match MockTransport::from_file(mock) {
        Ok(t) => t,
        Err(runtime::FixtureError::Io { source, .. }) => return Err(CliError::io(mock, source)),
        Err(e) => return Err(CliError::Failure(e.to_string())),
    };
    let config = RuntimeConfig::with_retries(retries, backoff_ms);
    let outcome = runtime::invoke_detailed(&module, api, &args, &transport, &BehaviorRegistry::default(), &config);
    let inv = match outcome {
        Ok(inv) => inv,
        Err(e @ RuntimeError::UnknownApi(_)) => return Err(CliError::Usage(e.to_string())),
        Err(RuntimeError::ValidationFailed(report)) => {
            report_violations(&report);
            return Err(CliError::Failure("validation failed".into()));
        }
        Err(e) => return Err(CliError::Failure(e.to_string())),
    };
    match format {
        Format::Json => {
            let ex = &inv.exchange;
            print_json(&json!({
                "result": inv.value.to_json(),
                "attempts": inv.attempts,
                "request": {
                    "method": ex.request.method,
                    "url": ex.url(),
                    "headers": ex.request.headers,
                    "body": String::from_utf8_lossy(&ex.request.body),
                },
                "status": ex.response.as_ref().map(|r| r.status_code),
            }))
        }
        _ => print_json(&inv.value.to_json()),
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<Json, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Failure(format!("{}: invalid JSON: {e}", path.display())))
}

pub fn analyze_diff(correct: &Path, wrong: &Path, format: Format) -> Result<(), CliError> {
    let report = analyzer::diff_params(&read_json(correct)?, &read_json(wrong)?);
    match format {
        Format::Json => println!("{}", serde_json::to_string(&report).expect("strings serialize")),
        _ => {
            for a in report.iter() {
                println!("{a}");
            }
        }
    }
    Ok(())
}

fn load_log(path: &Path) -> Result<analyzer::CallLog, CliError> {
    let log = analyzer::read_call_log(path).map_err(|e| CliError::io(path, e))?;
    for m in &log.malformed {
        report::warning(&format!("{}: skipped malformed record at {m}", path.display()));
    }
    Ok(log)
}

pub fn analyze_logs(path: &Path, api: Option<&str>, format: Format) -> Result<(), CliError> {
    let log = load_log(path)?;
    let mut tables = analyzer::pair_and_aggregate(&log.records);
    if let Some(api) = api {
        tables.retain(|k, _| k == api);
    }
    match format {
        Format::Json => print_json(&json!({
            "tables": tables.values().collect::<Vec<_>>(),
            "malformed": log.malformed,
        })),
        Format::Csv => print!("{}", analyzer::error_table_csv(&tables)),
        Format::Text => {
            for t in tables.values() {
                println!(
                    "{}: {} failed calls, {} paired ({:.1}%)",
                    t.api,
                    t.failed_calls,
                    t.paired_calls,
                    t.pairing_coverage() * 100.0
                );
                for r in &t.rows {
                    println!("  {:<24} {:<32} {:>6.3} {:>6}", r.error_code, r.annotation.to_string(), r.rate, r.count);
                }
            }
        }
    }
    Ok(())
}

pub fn analyze_quadrant(docs: &Path, logs: &Path, thresholds: (f64, f64), format: Format) -> Result<(), CliError> {
    let entries = std::fs::read_dir(docs).map_err(|e| CliError::io(docs, e))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut coverage = BTreeMap::new();
    for p in &paths {
        let doc: ApiDocSpec = serde_json::from_value(read_json(p)?)
            .map_err(|e| CliError::Failure(format!("{}: not an api documentation file: {e}", p.display())))?;
        let rate = analyzer::coverage_rate(&doc).map_err(|e| CliError::Failure(format!("{}: {e}", p.display())))?;
        coverage.insert(doc.api, rate);
    }
    let log = load_log(logs)?;
    let success = analyzer::success_rates(&log.records);
    let mut points = Vec::new();
    for (api, c) in &coverage {
        match success.get(api) {
            Some(s) => points.push((api.clone(), *c, *s)),
            None => report::warning(&format!("no calls logged for '{api}'; skipped")),
        }
    }
    for api in success.keys().filter(|a| !coverage.contains_key(*a)) {
        report::warning(&format!("no documentation for '{api}'; skipped"));
    }
    let ranked = analyzer::quadrant(&points, thresholds).map_err(|e| CliError::Usage(e.to_string()))?;
    match format {
        Format::Json => print_json(&serde_json::to_value(&ranked).expect("points serialize")),
        Format::Csv => print!("{}", analyzer::quadrant_csv(&ranked)),
        Format::Text => {
            for p in &ranked {
                println!(
                    "{:>4}  {}  coverage {:.3}  success {:.3}  {}",
                    p.rank, p.quadrant, p.coverage, p.success_rate, p.api
                );
            }
        }
    }
    Ok(())
}

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::*;
use crate::frontend::parse_source;
use crate::num::format_number;
use crate::semantics::{analyze, Rule, SemanticModule};
use crate::value::Value;

const GET_USER: &str = include_str!("../../tests/fixtures/listings/get_user.tea");

fn module(src: &str) -> SemanticModule {
    let m = analyze(&parse_source(src).expect("parses"));
    assert!(!m.has_errors(), "{:?}", m.diagnostics);
    m
}

fn args(v: serde_json::Value) -> BTreeMap<String, Value> {
    match Value::from(v) {
        Value::Map(m) => m,
        other => panic!("not an object: {other:?}"),
    }
}

fn mock(body: serde_json::Value) -> MockTransport {
    MockTransport::from_json(&json!([{"respond": {"statusCode": 200, "body": body}}]).to_string()).unwrap()
}

fn fast(retries: u32) -> RuntimeConfig {
    RuntimeConfig::with_retries(retries, 0)
}

#[test]
fn get_user_request_block() {
    let m = module(GET_USER);
    let ex = build_request(&m, "getUser", &args(json!({"username": "jack"})), &RuntimeConfig::default()).unwrap();
    assert_eq!(ex.request.method, "GET");
    assert_eq!(ex.request.pathname, "/users/jack");
    assert_eq!(ex.request.headers, BTreeMap::from([("host".to_string(), "hostname".to_string())]));
    assert_eq!((ex.protocol.as_str(), ex.port), ("https", 443));
    assert!(ex.response.is_none());
}

#[test]
fn no_implicit_url_encoding() {
    let m = module(GET_USER);
    let ex = build_request(&m, "getUser", &args(json!({"username": "a b"})), &RuntimeConfig::default()).unwrap();
    assert_eq!(ex.request.pathname, "/users/a b");
}

#[test]
fn empty_request_block_takes_defaults() {
    let m = module("api ping(): void {} returns {}");
    let ex = build_request(&m, "ping", &BTreeMap::new(), &RuntimeConfig::default()).unwrap();
    let mut expected = HttpExchange::new(&RuntimeConfig::default());
    expected.request.method = "GET".into();
    assert_eq!(ex, expected);
    assert_eq!(ex.url(), "https://:443");
}

#[test]
fn build_request_is_pure() {
    let m = module(GET_USER);
    let a = args(json!({"username": "jack"}));
    let first = build_request(&m, "getUser", &a, &RuntimeConfig::default()).unwrap();
    for _ in 0..20 {
        assert_eq!(build_request(&m, "getUser", &a, &RuntimeConfig::default()).unwrap(), first);
    }
}

#[test]
fn argument_validation_runs_first() {
    let m = module(GET_USER);
    let err = build_request(&m, "getUser", &BTreeMap::new(), &RuntimeConfig::default()).unwrap_err();
    let RuntimeError::ValidationFailed(report) = err else { panic!("{err:?}") };
    assert_eq!(report.violations[0].path, "username");
    assert_eq!(report.violations[0].rule, Rule::MissingRequired);

    let err = build_request(&m, "getUser", &args(json!({"username": 5})), &RuntimeConfig::default()).unwrap_err();
    let RuntimeError::ValidationFailed(report) = err else { panic!("{err:?}") };
    assert_eq!(report.violations[0].rule, Rule::TypeMismatch);

    assert_eq!(
        build_request(&m, "nope", &BTreeMap::new(), &RuntimeConfig::default()),
        Err(RuntimeError::UnknownApi("nope".into()))
    );
}

#[test]
fn invoke_get_user_over_mock() {
    let m = module(GET_USER);
    let t = mock(json!({"username": "jack", "age": 30}));
    let v = invoke(&m, "getUser", &args(json!({"username": "jack"})), &t, &BehaviorRegistry::default(), &fast(0))
        .unwrap();
    assert_eq!(v, Value::from(json!({"username": "jack", "age": 30})));
    let sent = t.requests();
    assert_eq!(sent.len(), 1);
    assert_eq!(sent[0].request.pathname, "/users/jack");
}

#[test]
fn invoke_strips_undeclared_fields() {
    let m = module(GET_USER);
    let t = mock(json!({"username": "jack", "age": 30, "extra": true}));
    let v = invoke(&m, "getUser", &args(json!({"username": "jack"})), &t, &BehaviorRegistry::default(), &fast(0))
        .unwrap();
    assert_eq!(v, Value::from(json!({"username": "jack", "age": 30})));
}

#[test]
fn invoke_rejects_ill_typed_response() {
    let m = module(GET_USER);
    let t = mock(json!({"username": "jack", "age": 7}));
    let err = invoke(&m, "getUser", &args(json!({"username": "jack"})), &t, &BehaviorRegistry::default(), &fast(0))
        .unwrap_err();
    let RuntimeError::ValidationFailed(report) = err else { panic!("{err:?}") };
    let got: Vec<_> = report.violations.iter().map(|v| (v.path.as_str(), v.rule, v.detail.as_str())).collect();
    assert_eq!(got, vec![("age", Rule::Min, "7 < 18")]);
}

#[test]
fn retries_only_transport_failures() {
    let m = module(GET_USER);
    let a = args(json!({"username": "jack"}));
    for retries in [0u32, 1, 2, 5] {
        let t = MockTransport::from_json(r#"[{"respond": {"error": "connection refused"}}]"#).unwrap();
        let err = invoke(&m, "getUser", &a, &t, &BehaviorRegistry::default(), &fast(retries)).unwrap_err();
        assert!(matches!(err, RuntimeError::Transport { attempts, .. } if attempts == retries + 1));
        assert_eq!(t.attempts() as u32, retries + 1);
    }
    // Two failures then success: needs 3 attempts, succeeds with retry_times >= 2.
    for retries in [0u32, 1, 2, 5] {
        let t = MockTransport::from_json(
            r#"[{"respond": {"error": "reset"}, "times": 2},
                {"respond": {"statusCode": 200, "body": {"username": "jack", "age": 30}}}]"#,
        )
        .unwrap();
        let r = invoke_detailed(&m, "getUser", &a, &t, &BehaviorRegistry::default(), &fast(retries));
        assert_eq!(t.attempts() as u32, 3.min(retries + 1));
        assert_eq!(r.is_ok(), retries >= 2);
    }
    // HTTP errors are data, not retried.
    let t = MockTransport::from_json(r#"[{"respond": {"statusCode": 503, "body": "{}"}}]"#).unwrap();
    let err = invoke(&m, "getUser", &a, &t, &BehaviorRegistry::default(), &fast(3)).unwrap_err();
    assert!(matches!(err, RuntimeError::ValidationFailed(_)));
    assert_eq!(t.attempts(), 1);
}

#[test]
fn status_code_is_plain_data() {
    let src = "import Util;
api probe(): string {
  __request.pathname = '/x';
} returns {
  if (__response.statusCode == 200) {
    return 'ok';
  } else if (__response.statusCode == 404) {
    return 'missing';
  } else {
    return Util.readAsString(__response.body);
  }
}";
    let m = module(src);
    let run = |fixture: &str| {
        let t = MockTransport::from_json(fixture).unwrap();
        invoke(&m, "probe", &BTreeMap::new(), &t, &BehaviorRegistry::default(), &fast(0)).unwrap()
    };
    assert_eq!(run(r#"[{"respond": {"statusCode": 200}}]"#), Value::from("ok"));
    assert_eq!(run(r#"[]"#), Value::from("missing"));
    assert_eq!(run(r#"[{"respond": {"statusCode": 500, "body": "down"}}]"#), Value::from("down"));
}

#[test]
fn if_false_takes_else_branch() {
    let m = module("api f(): number {} returns { if (false) { return 0; } else { return 1; } }");
    let t = mock(json!(null));
    let v = invoke(&m, "f", &BTreeMap::new(), &t, &BehaviorRegistry::default(), &fast(0)).unwrap();
    assert_eq!(v, Value::Number(1.0));
}

#[test]
fn behaviors_must_be_bound() {
    let src = "type @sign = (string): string
api f(k: string): void {
  __request.headers = { sig = @sign(k) };
} returns {}";
    let m = module(src);
    let t = mock(json!(null));
    let a = args(json!({"k": "abc"}));
    let err = invoke(&m, "f", &a, &t, &BehaviorRegistry::default(), &fast(0)).unwrap_err();
    assert_eq!(err, RuntimeError::Eval(EvalError::UnboundBehavior("sign".into())));
    assert_eq!(t.attempts(), 0);

    let mut reg = BehaviorRegistry::default();
    reg.bind("sign", |a| match a {
        [Value::String(s)] => Ok(Value::String(s.chars().rev().collect())),
        _ => Err("bad args".into()),
    });
    invoke(&m, "f", &a, &t, &reg, &fast(0)).unwrap();
    assert_eq!(t.requests()[0].request.headers["sig"], "cba");
}

#[test]
fn request_setters_are_checked() {
    let bad_port = module("api f(p: number): void { __request.port = p; } returns {}");
    let cfg = RuntimeConfig::default();
    assert!(build_request(&bad_port, "f", &args(json!({"p": 8080})), &cfg).is_ok());
    for p in [0.0, 70000.0, 1.5] {
        let err = build_request(&bad_port, "f", &args(json!({"p": p})), &cfg).unwrap_err();
        assert!(matches!(err, RuntimeError::Eval(EvalError::Type(_))), "{p}");
    }
    let proto = module("api f(p: string): void { __request.protocol = p; } returns {}");
    assert!(build_request(&proto, "f", &args(json!({"p": "http"})), &cfg).is_ok());
    assert!(build_request(&proto, "f", &args(json!({"p": "ftp"})), &cfg).is_err());
}

#[test]
fn null_in_template_is_an_error() {
    let m = module("api f(p: any): void { __request.pathname = `/x/${p}`; } returns {}");
    let err = build_request(&m, "f", &BTreeMap::new(), &RuntimeConfig::default()).unwrap_err();
    assert_eq!(err, RuntimeError::Eval(EvalError::NullInTemplate));
}

#[test]
fn null_dereference_is_reported() {
    let m = module(
        "import Util;
api f(): any {} returns { var b = Util.readAsJSON(__response.body); return b.a.b; }",
    );
    let t = mock(json!({"x": 1}));
    let err = invoke(&m, "f", &BTreeMap::new(), &t, &BehaviorRegistry::default(), &fast(0)).unwrap_err();
    assert_eq!(err, RuntimeError::Eval(EvalError::NullDereference { path: "b.a.b".into() }));
}

#[test]
fn concurrent_invokes_share_module() {
    let m = module(GET_USER);
    let reg = BehaviorRegistry::default();
    std::thread::scope(|s| {
        for i in 0..8 {
            let (m, reg) = (&m, &reg);
            s.spawn(move || {
                let name = format!("u{i}");
                let t = mock(json!({"username": name, "age": 20 + i}));
                let v = invoke(m, "getUser", &args(json!({"username": name})), &t, reg, &fast(0)).unwrap();
                assert_eq!(v, Value::from(json!({"username": name, "age": 20 + i})));
            });
        }
    });
}

// Independent reference evaluator for the expression oracle.
#[derive(Debug, Clone)]
enum Gen {
    Str(String),
    Num(f64),
    Bool(bool),
    Add(Box<Gen>, Box<Gen>),
    Eq(Box<Gen>, Box<Gen>, bool),
    And(Box<Gen>, Box<Gen>),
    Or(Box<Gen>, Box<Gen>),
    Tpl(String, Box<Gen>),
}

#[derive(Debug, Clone, PartialEq)]
enum O {
    S(String),
    N(f64),
    B(bool),
}

impl Gen {
    fn source(&self) -> String {
        match self {
            Gen::Str(s) => format!("'{s}'"),
            Gen::Num(n) => format_number(*n),
            Gen::Bool(b) => b.to_string(),
            Gen::Add(a, b) => format!("({} + {})", a.source(), b.source()),
            Gen::Eq(a, b, eq) => format!("({} {} {})", a.source(), if *eq { "==" } else { "!=" }, b.source()),
            Gen::And(a, b) => format!("({} && {})", a.source(), b.source()),
            Gen::Or(a, b) => format!("({} || {})", a.source(), b.source()),
            Gen::Tpl(s, e) => format!("`{s}${{{}}}`", e.source()),
        }
    }

    fn oracle(&self) -> O {
        match self {
            Gen::Str(s) => O::S(s.clone()),
            Gen::Num(n) => O::N(*n),
            Gen::Bool(b) => O::B(*b),
            Gen::Add(a, b) => match (a.oracle(), b.oracle()) {
                (O::N(x), O::N(y)) => O::N(x + y),
                (O::S(x), O::S(y)) => O::S(x + &y),
                _ => unreachable!("generator is well typed"),
            },
            Gen::Eq(a, b, eq) => O::B((a.oracle() == b.oracle()) == *eq),
            Gen::And(a, b) => match a.oracle() {
                O::B(false) => O::B(false),
                _ => b.oracle(),
            },
            Gen::Or(a, b) => match a.oracle() {
                O::B(true) => O::B(true),
                _ => b.oracle(),
            },
            Gen::Tpl(s, e) => match e.oracle() {
                O::S(x) => O::S(format!("{s}{x}")),
                O::N(n) => O::S(format!("{s}{}", format_number(n))),
                O::B(b) => O::S(format!("{s}{b}")),
            },
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    S,
    N,
    B,
}

fn gen(rng: &mut ChaCha8Rng, kind: Kind, depth: u32) -> Gen {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    let word = |rng: &mut ChaCha8Rng| ["a", "b", "c", "xy", ""][rng.gen_range(0..5)].to_string();
    match kind {
        Kind::S if leaf => Gen::Str(word(rng)),
        Kind::S => match rng.gen_range(0..2) {
            0 => Gen::Add(Box::new(gen(rng, Kind::S, depth - 1)), Box::new(gen(rng, Kind::S, depth - 1))),
            _ => {
                let k = [Kind::S, Kind::N, Kind::B][rng.gen_range(0..3)];
                Gen::Tpl(word(rng), Box::new(gen(rng, k, depth - 1)))
            }
        },
        Kind::N if leaf => Gen::Num(rng.gen_range(0..20) as f64),
        Kind::N => Gen::Add(Box::new(gen(rng, Kind::N, depth - 1)), Box::new(gen(rng, Kind::N, depth - 1))),
        Kind::B if leaf => Gen::Bool(rng.gen()),
        Kind::B => match rng.gen_range(0..3) {
            0 => {
                let k = [Kind::S, Kind::N, Kind::B][rng.gen_range(0..3)];
                Gen::Eq(
                    Box::new(gen(rng, k, depth - 1)),
                    Box::new(gen(rng, k, depth - 1)),
                    rng.gen(),
                )
            }
            1 => Gen::And(Box::new(gen(rng, Kind::B, depth - 1)), Box::new(gen(rng, Kind::B, depth - 1))),
            _ => Gen::Or(Box::new(gen(rng, Kind::B, depth - 1)), Box::new(gen(rng, Kind::B, depth - 1))),
        },
    }
}

#[test]
fn expression_oracle_agrees_on_random_expressions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7ea);
    let t = mock(json!(null));
    let reg = BehaviorRegistry::default();
    for i in 0..200 {
        let kind = [Kind::S, Kind::N, Kind::B][i % 3];
        let g = gen(&mut rng, kind, 4);
        let src = format!("api f(): any {{}} returns {{ return {}; }}", g.source());
        let m = module(&src);
        let got = invoke(&m, "f", &BTreeMap::new(), &t, &reg, &fast(0)).unwrap();
        let want = match g.oracle() {
            O::S(s) => Value::String(s),
            O::N(n) => Value::Number(n),
            O::B(b) => Value::Bool(b),
        };
        assert_eq!(got, want, "{src}");
    }
}

#[test]
fn string_concat_is_left_associative() {
    let m = module("api f(): string {} returns { return 'a' + 'b' + 'c'; }");
    let v = invoke(&m, "f", &BTreeMap::new(), &mock(json!(null)), &BehaviorRegistry::default(), &fast(0)).unwrap();
    assert_eq!(v, Value::from("abc"));
}

use std::collections::BTreeMap;

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use serde_json::json;

use teaforge_core::analyzer::{self, CallRecord};
use teaforge_core::codegen::{emit, find_target};
use teaforge_core::frontend::tokenize;
use teaforge_core::runtime::{invoke, BehaviorRegistry, MockTransport, RuntimeConfig};
use teaforge_core::semantics::analyze;
use teaforge_core::value::Value;

const GET_USER: &str = include_str!("../../core/tests/fixtures/listings/get_user.tea");
const CORRECT: &str = include_str!("../../core/tests/fixtures/running_example/correct.json");
const WRONG: &str = include_str!("../../core/tests/fixtures/running_example/wrong.json");

fn frontend(c: &mut Criterion) {
    c.bench_function("tokenize get_user", |b| b.iter(|| tokenize(black_box(GET_USER)).unwrap()));
    c.bench_function("parse+analyze get_user", |b| {
        b.iter(|| analyze(&teaforge_core::parse_source(black_box(GET_USER)).unwrap()))
    });
}

fn runtime(c: &mut Criterion) {
    let module = analyze(&teaforge_core::parse_source(GET_USER).unwrap());
    let args: BTreeMap<String, Value> = [("username".to_string(), Value::from("jack"))].into();
    let registry = BehaviorRegistry::default();
    let config = RuntimeConfig::default();
    c.bench_function("invoke getUser (mock)", |b| {
        b.iter_batched(
            || {
                MockTransport::from_json(r#"[{"respond":{"statusCode":200,"body":{"username":"jack","age":30}}}]"#)
                    .unwrap()
            },
            |t| invoke(&module, "getUser", &args, &t, &registry, &config).unwrap(),
            BatchSize::SmallInput,
        )
    });
    for id in ["python", "typescript"] {
        let target = find_target(id).unwrap();
        c.bench_function(&format!("emit {id}"), |b| b.iter(|| emit(&module, &target).unwrap()));
    }
}

fn analytics(c: &mut Criterion) {
    let (correct, wrong) = (serde_json::from_str(CORRECT).unwrap(), serde_json::from_str(WRONG).unwrap());
    c.bench_function("flatten+diff running example", |b| {
        b.iter(|| analyzer::diff_params(black_box(&correct), black_box(&wrong)))
    });

    let records: Vec<CallRecord> = (0..20_000)
        .map(|i| CallRecord {
            timestamp: i * 1_000,
            user_id: format!("u{}", i % 500),
            api: format!("Api{}", i % 7),
            params: json!({"RegionId": "cn", "InstanceIds": if i % 3 == 0 { json!("i-a") } else { json!(["i-a"]) }, "Page": i % 4}),
            success: i % 3 != 0,
            error_code: (i % 3 == 0).then(|| "InvalidParameter".to_string()),
        })
        .collect();
    c.bench_function("pair_and_aggregate 20k records", |b| b.iter(|| analyzer::pair_and_aggregate(black_box(&records))));

    let points: Vec<(String, f64, f64)> =
        (0..1000).map(|i| (format!("api{i}"), (i % 97) as f64 / 96.0, (i % 89) as f64 / 88.0)).collect();
    c.bench_function("quadrant 1000 points", |b| {
        b.iter(|| analyzer::quadrant(black_box(&points), analyzer::DEFAULT_THRESHOLDS).unwrap())
    });
}

criterion_group!(benches, frontend, runtime, analytics);
criterion_main!(benches);

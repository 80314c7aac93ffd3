//! Generated clients against the reference interpreter: every scenario of
//! the fixture corpus must produce the same last request, attempt count and
//! decoded result (or error kind) on every target.

mod common;

use common::*;
use serde_json::Value as Json;

fn corpus_dir() -> std::path::PathBuf {
    fixtures().join("differential")
}

fn compare(target: &str, run: impl Fn(&teaforge_core::semantics::SemanticModule, &[Scenario]) -> Vec<Json>) {
    let mut mismatches = Vec::new();
    let mut total = 0;
    for (name, module, scenarios) in corpus(&corpus_dir()) {
        let got = run(&module, &scenarios);
        assert_eq!(got.len(), scenarios.len(), "{target}/{name}: outcome count");
        for (s, g) in scenarios.iter().zip(&got) {
            total += 1;
            let want = canonical(&reference_outcome(&module, s));
            let g = canonical(g);
            if want != g {
                mismatches.push(format!(
                    "{target} {name}/{}:\n  reference: {want}\n  generated: {g}",
                    s.name
                ));
            }
        }
    }
    println!("{target}: {} of {total} scenarios agree", total - mismatches.len());
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn corpus_is_large_enough() {
    let corpus = corpus(&corpus_dir());
    assert!(corpus.len() >= 10, "{} modules", corpus.len());
    for (name, module, scenarios) in &corpus {
        assert!(scenarios.len() >= 3, "{name}: {} scenarios", scenarios.len());
        for s in scenarios {
            assert!(module.apis.contains_key(&s.api), "{name}/{}: unknown api {}", s.name, s.api);
        }
    }
}

#[test]
fn python_matches_reference() {
    if !have("python3") {
        eprintln!("python3 not found; skipping");
        return;
    }
    compare("python", python_outcomes);
}

#[test]
fn typescript_matches_reference() {
    if !have("tsc") || !have("node") {
        eprintln!("tsc/node not found; skipping");
        return;
    }
    compare("typescript", typescript_outcomes);
}

/// Reference outcomes are frozen in `outcomes.json`; regenerate with
/// `TEAFORGE_BLESS=1` after an intentional semantic change.
#[test]
fn reference_outcomes_are_frozen() {
    let mut all = serde_json::Map::new();
    for (name, module, scenarios) in corpus(&corpus_dir()) {
        let outcomes: Vec<Json> = scenarios.iter().map(|s| reference_outcome(&module, s)).collect();
        all.insert(name, Json::Array(outcomes));
    }
    let actual = Json::Object(all);
    let path = corpus_dir().join("outcomes.json");
    if std::env::var_os("TEAFORGE_BLESS").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&actual).unwrap() + "\n").unwrap();
    }
    let frozen: Json = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(canonical(&frozen), canonical(&actual));
}

use super::*;
use crate::frontend::parse_source;
use crate::semantics::analyze;

const GET_USER: &str = include_str!("../../tests/fixtures/listings/get_user.tea");

fn module(src: &str) -> SemanticModule {
    let m = analyze(&parse_source(src).expect("parses"));
    assert!(!m.has_errors(), "{:?}", m.errors().collect::<Vec<_>>());
    m
}

fn args(json: &str) -> BTreeMap<String, Value> {
    match Value::from(serde_json::from_str::<serde_json::Value>(json).unwrap()) {
        Value::Map(m) => m,
        other => panic!("not an object: {other:?}"),
    }
}

fn targets() -> Vec<EmitterTarget> {
    list_targets()
}

#[test]
fn two_targets_with_unique_ids() {
    let ids: Vec<_> = targets().iter().map(|t| t.target_id).collect();
    assert_eq!(ids, ["python", "typescript"]);
    assert_eq!(find_target("python").unwrap().file_extension, "py");
    assert_eq!(find_target("typescript").unwrap().file_extension, "ts");
    assert!(find_target("cobol").is_none());
}

#[test]
fn type_mapping_is_total() {
    for t in targets() {
        for ty in TypeExpr::all_variants() {
            let s = t.map_type(&ty);
            assert!(!s.is_empty(), "{}: {ty}", t.target_id);
        }
    }
    let py = find_target("python").unwrap();
    assert_eq!(py.map_type(&TypeExpr::map_of(TypeExpr::array_of(TypeExpr::Named("user".into())))), "Dict[str, List[User]]");
    let ts = find_target("typescript").unwrap();
    assert_eq!(ts.map_type(&TypeExpr::array_of(TypeExpr::Readable)), "Array<tea.Readable>");
}

#[test]
fn identifier_styles_are_idempotent() {
    for t in targets() {
        for name in ["getUser", "get_user", "HTTPServer", "x2y", "a"] {
            let once = t.identifier_style.apply(name);
            assert_eq!(t.identifier_style.apply(&once), once, "{}: {name}", t.target_id);
        }
    }
    assert_eq!(IdentStyle::SnakeCase.apply("getUser"), "get_user");
    assert_eq!(IdentStyle::CamelCase.apply("get_user"), "getUser");
}

#[test]
fn string_literals_round_trip() {
    for t in targets() {
        let raw = "a \"quoted\" \\ line\nbreak ☕";
        let lit = t.render_string(raw);
        assert_eq!(serde_json::from_str::<String>(&lit).unwrap(), raw, "{}", t.target_id);
    }
}

#[test]
fn emission_is_deterministic() {
    let m = module(GET_USER);
    for t in targets() {
        let a = emit(&m, &t).unwrap();
        let b = emit(&module(GET_USER), &t).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.manifest(), b.manifest());
    }
}

#[test]
fn empty_module_gives_skeleton() {
    let m = module("");
    let py = emit(&m, &find_target("python").unwrap()).unwrap();
    assert_eq!(py.paths().collect::<Vec<_>>(), ["client.py", "models.py", "tea_core.py"]);
    let ts = emit(&m, &find_target("typescript").unwrap()).unwrap();
    assert_eq!(ts.paths().collect::<Vec<_>>(), ["client.ts", "models.ts", "tea_core.ts"]);
}

#[test]
fn errors_block_generation() {
    let m = analyze(&parse_source("model A { b: Missing }").unwrap());
    assert!(m.has_errors());
    for t in targets() {
        assert_eq!(emit(&m, &t), Err(CodegenError::ModuleHasErrors));
    }
}

#[test]
fn client_lowers_request_block() {
    let m = module(GET_USER);
    let py = emit(&m, &find_target("python").unwrap()).unwrap();
    let client = py.get("client.py").unwrap();
    assert!(client.contains("def get_user(self, username: str) -> User:"));
    assert!(client.contains(r#"tea_core.set_request(_req, ["method"], "GET")"#));
    assert!(client.contains(r#""/users/", tea_core.hole(username)"#));

    let ts = emit(&m, &find_target("typescript").unwrap()).unwrap();
    let client = ts.get("client.ts").unwrap();
    assert!(client.contains("async getUser(username: string): Promise<User>"));
    assert!(client.contains(r#"tea.setRequest(_req, ["method"], "GET");"#));
    assert!(client.contains(r#""/users/", tea.hole(username)"#));
}

fn meta_from_python(models_py: &str, class: &str) -> serde_json::Value {
    let start = models_py.find(&format!("class {class}(")).unwrap();
    let rest = &models_py[start..];
    let open = rest.find("r\"\"\"").unwrap() + 4;
    let close = rest[open..].find("\"\"\"").unwrap();
    serde_json::from_str(&rest[open..open + close]).unwrap()
}

#[test]
fn model_metadata_carries_attributes() {
    let m = module(GET_USER);
    let py = emit(&m, &find_target("python").unwrap()).unwrap();
    let meta = meta_from_python(py.get("models.py").unwrap(), "User");
    let decl = &m.models["User"];
    let fields = meta["fields"].as_array().unwrap();
    assert_eq!(fields.len(), decl.fields.len());
    for (f, d) in fields.iter().zip(&decl.fields) {
        assert_eq!(f["name"], d.name.name.as_str());
        assert_eq!(f["optional"], d.optional);
        assert_eq!(f["type"], type_descriptor(&d.ty));
        let attrs = f["attributes"].as_object().unwrap();
        assert_eq!(attrs.len(), d.attributes.len());
        for a in &d.attributes {
            assert!(attrs.contains_key(&a.key.name), "{}", a.key.name);
        }
    }
    assert_eq!(fields[0]["attributes"]["pattern"], "[a-zA-Z1-9]");
    assert_eq!(fields[1]["attributes"]["pattern"], "\\d+");
    assert_eq!(fields[1]["attributes"]["min"], 18);

    let ts = emit(&m, &find_target("typescript").unwrap()).unwrap();
    let models = ts.get("models.ts").unwrap();
    let line = models.lines().find(|l| l.starts_with("export const UserMeta")).unwrap();
    let json = line.trim_start_matches("export const UserMeta: tea.ModelMeta = ").trim_end_matches(';');
    assert_eq!(serde_json::from_str::<serde_json::Value>(json).unwrap(), meta);
}

#[test]
fn type_descriptors() {
    let ty = TypeExpr::map_of(TypeExpr::array_of(TypeExpr::Named("U".into())));
    assert_eq!(type_descriptor(&ty), serde_json::json!(["map", ["array", ["model", "U"]]]));
    assert_eq!(type_descriptor(&TypeExpr::Readable), serde_json::json!("readable"));
}

#[test]
fn samples_name_the_method_and_arguments() {
    let m = module(GET_USER);
    let a = args(r#"{"username": "jack"}"#);
    let py = emit_code_sample(&m, "getUser", &a, &find_target("python").unwrap()).unwrap();
    assert!(py.contains(r#"result = client.get_user("jack")"#), "{py}");
    let ts = emit_code_sample(&m, "getUser", &a, &find_target("typescript").unwrap()).unwrap();
    assert!(ts.contains(r#"await client.getUser("jack")"#), "{ts}");
}

#[test]
fn zero_param_sample_is_a_bare_call() {
    let m = module("api ping(): void { __request.pathname = '/ping'; } returns { }");
    let py = emit_code_sample(&m, "ping", &BTreeMap::new(), &find_target("python").unwrap()).unwrap();
    assert!(py.contains("result = client.ping()"), "{py}");
    let ts = emit_code_sample(&m, "ping", &BTreeMap::new(), &find_target("typescript").unwrap()).unwrap();
    assert!(ts.contains("await client.ping()"), "{ts}");
}

#[test]
fn samples_validate_arguments() {
    let m = module(GET_USER);
    let py = find_target("python").unwrap();
    assert_eq!(
        emit_code_sample(&m, "nope", &BTreeMap::new(), &py),
        Err(CodegenError::UnknownApi("nope".into()))
    );
    match emit_code_sample(&m, "getUser", &args(r#"{"username": 3}"#), &py) {
        Err(CodegenError::InvalidArgs(r)) => assert_eq!(r.violations[0].path, "username"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn manifest_lists_digests() {
    let m = module(GET_USER);
    let files = emit(&m, &find_target("python").unwrap()).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&files.manifest()).unwrap();
    let entries = manifest["files"].as_array().unwrap();
    assert_eq!(entries.len(), files.len());
    for (e, (path, text)) in entries.iter().zip(files.iter()) {
        assert_eq!(e["path"], path);
        assert_eq!(e["bytes"], text.len());
        assert_eq!(e["sha256"].as_str().unwrap(), hex_digest(text.as_bytes()));
        assert_eq!(e["sha256"].as_str().unwrap().len(), 64);
    }
    assert_eq!(
        hex_digest(b"abc"),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
}

#[test]
fn write_to_creates_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&module(GET_USER), &find_target("typescript").unwrap()).unwrap();
    files.write_to(dir.path()).unwrap();
    for (path, text) in files.iter() {
        assert_eq!(std::fs::read_to_string(dir.path().join(path)).unwrap(), text);
    }
    assert_eq!(std::fs::read_to_string(dir.path().join("fileset.json")).unwrap(), files.manifest());
}

#[test]
#[should_panic]
fn fileset_rejects_escaping_paths() {
    FileSet::new().insert("../x.py", "");
}

#[test]
fn reserved_words_are_escaped() {
    let m = module("api class(from: string): string { __request.pathname = from; } returns { return from; }");
    let py = emit(&m, &find_target("python").unwrap()).unwrap();
    let client = py.get("client.py").unwrap();
    assert!(client.contains("def class_(self, from_: str) -> str:"), "{client}");
}

#[test]
fn colliding_names_are_rejected() {
    let m = module(
        "api getUser(): void { } returns { }\n\
         api get_user(): void { } returns { }",
    );
    match emit(&m, &find_target("python").unwrap()) {
        Err(CodegenError::UnsupportedConstruct { target, .. }) => assert_eq!(target, "python"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn custom_behaviors_become_hooks() {
    let m = module(
        "type @sign = (string): string\n\
         api s(x: string): string { __request.pathname = @sign(x); } returns { return x; }",
    );
    let py = emit(&m, &find_target("python").unwrap()).unwrap();
    let client = py.get("client.py").unwrap();
    assert!(client.contains("@tea_core.abstract"));
    assert!(client.contains("def sign(self"), "{client}");
    assert!(client.contains(r#"self._behaviors.require(["sign"])"#), "{client}");
    let ts = emit(&m, &find_target("typescript").unwrap()).unwrap();
    assert!(ts.get("client.ts").unwrap().contains(r#""sign"(arg0: string): string;"#));
}

//! End-to-end matrix: every subcommand × {success, failure, usage error,
//! missing file}, plus machine-readable output under `--format json`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn teaforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teaforge"))
        .args(args)
        .env("TEAFORGE_COLOR", "0")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Scratch {
    dir: tempfile::TempDir,
}

impl Scratch {
    fn new() -> Scratch {
        let s = Scratch { dir: tempfile::tempdir().unwrap() };
        s.write("broken.tea", "model A { b: Missing }\n");
        s.write("syntax.tea", "model {\n");
        s.write("adult.json", r#"[{"respond": {"statusCode": 200, "body": {"username": "jack", "age": 30}}}]"#);
        s.write("minor.json", r#"[{"respond": {"statusCode": 200, "body": {"username": "jack", "age": 17}}}]"#);
        s.write("bad.json", "{ not json");
        s.write(
            "calls.jsonl",
            concat!(
                r#"{"timestamp":1,"user_id":"u","api":"DescribeInstances","params":{"RegionId":"cn","InstanceIds":"i-a"},"success":false,"error_code":"InvalidParameter"}"#,
                "\n",
                r#"{"timestamp":2,"user_id":"u","api":"DescribeInstances","params":{"RegionId":"cn","InstanceIds":["i-a"]},"success":true}"#,
                "\n",
                r#"{"timestamp":3,"user_id":"v","api":"SendSms","params":{},"success":true}"#,
                "\nnot a record\n",
            ),
        );
        std::fs::create_dir(s.path("docs")).unwrap();
        std::fs::create_dir(s.path("empty_docs")).unwrap();
        s.write(
            "docs/describe.json",
            r#"{"api": "DescribeInstances", "parameters": [
                {"name": "RegionId", "type": "String", "required": true, "description": "Region", "example": "cn-hangzhou"},
                {"name": "InstanceIds", "type": "String", "required": false, "description": "", "example": ""}]}"#,
        );
        std::fs::copy(fixtures().join("running_example/fragment_doc.json"), s.path("docs/sms.json")).unwrap();
        s.write("empty_docs/x.json", r#"{"api": "X", "parameters": []}"#);
        s
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn p(&self, rel: &str) -> String {
        self.path(rel).display().to_string()
    }

    fn write(&self, rel: &str, text: &str) {
        std::fs::write(self.path(rel), text).unwrap();
    }
}

struct Case {
    name: &'static str,
    args: Vec<String>,
    code: i32,
}

fn matrix(s: &Scratch) -> Vec<Case> {
    let get_user = fx("listings/get_user.tea");
    let correct = fx("running_example/correct.json");
    let wrong = fx("running_example/wrong.json");
    let out = s.p("out");
    let case = |name, args: &[&str], code| Case { name, args: args.iter().map(|a| a.to_string()).collect(), code };
    vec![
        case("check ok", &["check", &get_user], 0),
        case("check errors", &["check", &s.p("broken.tea")], 1),
        case("check syntax", &["check", &s.p("syntax.tea")], 1),
        case("check usage", &["check"], 2),
        case("check missing", &["check", &s.p("nope.tea")], 3),
        case("ast ok", &["ast", &get_user], 0),
        case("ast syntax", &["ast", &s.p("syntax.tea")], 1),
        case("ast usage", &["ast", &get_user, "--bogus"], 2),
        case("ast missing", &["ast", &s.p("nope.tea")], 3),
        case("gen ok", &["gen", &get_user, "--target", "python", "--out", &out], 0),
        case("gen errors", &["gen", &s.p("broken.tea"), "--target", "python", "--out", &out], 1),
        case("gen usage", &["gen", &get_user, "--target", "cobol", "--out", &out], 2),
        case("gen missing", &["gen", &s.p("missing.tea"), "--target", "python", "--out", &out], 3),
        case("sample ok", &["sample", &get_user, "--api", "getUser", "--args", r#"{"username":"jack"}"#, "--target", "typescript"], 0),
        case("sample invalid args", &["sample", &get_user, "--api", "getUser", "--args", r#"{"username":3}"#, "--target", "python"], 1),
        case("sample usage", &["sample", &get_user, "--api", "nope", "--target", "python"], 2),
        case("sample missing", &["sample", &s.p("nope.tea"), "--api", "getUser", "--target", "python"], 3),
        case("invoke ok", &["invoke", &get_user, "--api", "getUser", "--args", r#"{"username":"jack"}"#, "--mock", &s.p("adult.json")], 0),
        case("invoke violation", &["invoke", &get_user, "--api", "getUser", "--args", r#"{"username":"jack"}"#, "--mock", &s.p("minor.json")], 1),
        case("invoke bad fixture", &["invoke", &get_user, "--api", "getUser", "--args", r#"{"username":"jack"}"#, "--mock", &s.p("bad.json")], 1),
        case("invoke usage", &["invoke", &get_user, "--api", "getUser", "--args", "[", "--mock", &s.p("adult.json")], 2),
        case("invoke unknown api", &["invoke", &get_user, "--api", "nope", "--mock", &s.p("adult.json")], 2),
        case("invoke missing", &["invoke", &get_user, "--api", "getUser", "--args", r#"{"username":"jack"}"#, "--mock", &s.p("nope.json")], 3),
        case("diff ok", &["analyze", "diff", "--correct", &correct, "--wrong", &wrong], 0),
        case("diff invalid json", &["analyze", "diff", "--correct", &correct, "--wrong", &s.p("bad.json")], 1),
        case("diff usage", &["analyze", "diff", "--correct", &correct], 2),
        case("diff missing", &["analyze", "diff", "--correct", &correct, "--wrong", &s.p("nope.json")], 3),
        case("logs ok", &["analyze", "logs", &s.p("calls.jsonl")], 0),
        case("logs usage", &["analyze", "logs"], 2),
        case("logs csv on check", &["--format", "csv", "check", &get_user], 2),
        case("logs missing", &["analyze", "logs", &s.p("nope.jsonl")], 3),
        case("quadrant ok", &["analyze", "quadrant", "--docs", &s.p("docs"), "--logs", &s.p("calls.jsonl")], 0),
        case("quadrant empty spec", &["analyze", "quadrant", "--docs", &s.p("empty_docs"), "--logs", &s.p("calls.jsonl")], 1),
        case("quadrant usage", &["analyze", "quadrant", "--docs", &s.p("docs"), "--logs", &s.p("calls.jsonl"), "--x0", "abc"], 2),
        case("quadrant range", &["analyze", "quadrant", "--docs", &s.p("docs"), "--logs", &s.p("calls.jsonl"), "--x0", "1.5"], 2),
        case("quadrant missing", &["analyze", "quadrant", "--docs", &s.p("nodir"), "--logs", &s.p("calls.jsonl")], 3),
        case("no subcommand", &[], 2),
        case("help", &["--help"], 0),
    ]
}

#[test]
fn exit_code_matrix() {
    let s = Scratch::new();
    let mut wrong = Vec::new();
    for c in matrix(&s) {
        let args: Vec<&str> = c.args.iter().map(String::as_str).collect();
        let o = teaforge(&args);
        let code = o.status.code().unwrap();
        if code != c.code {
            wrong.push(format!(
                "{}: expected {}, got {code}\nstderr: {}",
                c.name,
                c.code,
                String::from_utf8_lossy(&o.stderr)
            ));
        }
        if c.code != 0 && c.name != "no subcommand" {
            assert!(!o.stderr.is_empty(), "{}: failure without a message", c.name);
        }
    }
    assert!(wrong.is_empty(), "{}", wrong.join("\n"));
}

#[test]
fn json_output_is_parsable() {
    let s = Scratch::new();
    for c in matrix(&s).into_iter().filter(|c| c.code == 0 && c.name != "help") {
        let mut args = vec!["--format", "json"];
        args.extend(c.args.iter().map(String::as_str));
        let o = teaforge(&args);
        assert!(o.status.success(), "{}", c.name);
        let text = stdout(&o);
        serde_json::from_str::<serde_json::Value>(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", c.name));
    }
}

#[test]
fn check_listing_is_silent_on_stdout() {
    let o = teaforge(&["check", &fx("listings/get_user.tea")]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
}

#[test]
fn diff_prints_the_running_example() {
    let o = teaforge(&[
        "analyze",
        "diff",
        "--correct",
        &fx("running_example/correct.json"),
        "--wrong",
        &fx("running_example/wrong.json"),
    ]);
    assert_eq!(stdout(&o), std::fs::read_to_string(fixtures().join("running_example/expected.txt")).unwrap());
}

#[test]
fn gen_writes_manifest() {
    let s = Scratch::new();
    let out = s.p("sdk");
    let o = teaforge(&["gen", &fx("listings/get_user.tea"), "--target", "typescript", "--out", &out]);
    assert!(o.status.success());
    let listed: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(listed.len(), 4);
    assert!(s.path("sdk/fileset.json").exists());
    assert!(std::fs::read_to_string(s.path("sdk/client.ts")).unwrap().contains("getUser"));
}

#[test]
fn invoke_prints_result() {
    let s = Scratch::new();
    let o = teaforge(&[
        "--format", "json", "invoke", &fx("listings/get_user.tea"), "--api", "getUser", "--args",
        r#"{"username":"jack"}"#, "--mock", &s.p("adult.json"),
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"], serde_json::json!({"username": "jack", "age": 30}));
    assert_eq!(v["request"]["method"], "GET");
    assert_eq!(v["request"]["url"], "https://:443/users/jack");
    assert_eq!(v["attempts"], 1);
}

#[test]
fn args_from_file() {
    let s = Scratch::new();
    s.write("args.json", r#"{"username": "jack"}"#);
    let at = format!("@{}", s.p("args.json"));
    let o = teaforge(&["sample", &fx("listings/get_user.tea"), "--api", "getUser", "--args", &at, "--target", "python"]);
    assert!(stdout(&o).contains(r#"client.get_user("jack")"#));
}

#[test]
fn logs_report_malformed_lines_and_csv() {
    let s = Scratch::new();
    let o = teaforge(&["--format", "csv", "analyze", "logs", &s.p("calls.jsonl")]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("api,error_code,annotation,rate,count"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows, ["DescribeInstances,InvalidParameter,-InstanceIds.0,1,1", "DescribeInstances,InvalidParameter,InstanceIds,1,1"]);
}

#[test]
fn quadrant_ranks_and_skips_undocumented() {
    let s = Scratch::new();
    let o = teaforge(&["--format", "csv", "analyze", "quadrant", "--docs", &s.p("docs"), "--logs", &s.p("calls.jsonl")]);
    assert!(o.status.success());
    // DescribeInstances: coverage 0.5, success 0.5 -> Q1; SendSms: 1.0, 1.0 -> Q1.
    assert_eq!(
        stdout(&o),
        "api,coverage,success_rate,quadrant,rank\nDescribeInstances,0.5,0.5,Q1,1\nSendSms,1,1,Q1,2\n"
    );
}

#[test]
fn color_is_opt_in() {
    let s = Scratch::new();
    let run = |color: &str| {
        Command::new(env!("CARGO_BIN_EXE_teaforge"))
            .args(["check", &s.p("broken.tea")])
            .env("TEAFORGE_COLOR", color)
            .output()
            .unwrap()
    };
    assert!(String::from_utf8_lossy(&run("1").stderr).contains("\x1b["));
    assert!(!String::from_utf8_lossy(&run("0").stderr).contains("\x1b["));
}

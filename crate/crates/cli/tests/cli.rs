use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BASIC: &str = r#"{"schema_version":1,"n_jumps":3,
 "script":{"kind":"fixed_distribution","distribution":[0.5,0.3,0.2]},
 "driver":{"kind":"preassigned","values":["0.1","0.6","0.95"]}}"#;

fn qjump(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qjump"))
        .args(args)
        .current_dir(dir)
        .env_remove("QJUMP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn outcomes(ndjson: &str) -> Vec<u64> {
    ndjson
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["type"] == "jump")
        .map(|v| v["outcome"].as_u64().unwrap())
        .collect()
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn simulate_writes_trajectory_and_summary() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("run.json"), BASIC).unwrap();
    let out = qjump(tmp.path(), &["simulate", "run.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("run.ndjson")).unwrap();
    assert_eq!(outcomes(&text), vec![1, 2, 3]);
    let summary = stdout(&out);
    assert!(summary.contains("histogram 1:1 2:1 3:1"), "{summary}");
    assert!(summary.contains("digest sha256:"), "{summary}");
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run.ndjson.meta.json")).unwrap()).unwrap();
    assert!(meta["started_unix"].as_u64().is_some());
}

#[test]
fn simulate_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let manifest = r#"{"schema_version":1,"n_jumps":50,
        "script":{"kind":"fixed_distribution","distribution":[0.5,0.3,0.2]},
        "driver":{"kind":"bitshift","seed":{"constant":"pi_frac","budget":200}},
        "output":{"trajectory":"a.ndjson"}}"#;
    fs::write(tmp.path().join("run.json"), manifest).unwrap();
    assert_eq!(code(&qjump(tmp.path(), &["simulate", "run.json"])), 0);
    let first = fs::read(tmp.path().join("a.ndjson")).unwrap();
    assert_eq!(code(&qjump(tmp.path(), &["simulate", "run.json"])), 0);
    assert_eq!(first, fs::read(tmp.path().join("a.ndjson")).unwrap());
}

#[test]
fn invalid_manifests_exit_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        BASIC.replace("\"n_jumps\":3", "\"n_jumps\":0"),
        BASIC.replace("\"schema_version\":1", "\"schema_version\":9"),
        BASIC.replace("\"n_jumps\"", "\"unknown\":true,\"n_jumps\""),
        BASIC.replace("[0.5,0.3,0.2]", "[0.5,0.3,0.3]"),
        "not json".to_string(),
    ];
    for (i, text) in cases.iter().enumerate() {
        let name = format!("bad{i}.json");
        fs::write(tmp.path().join(&name), text).unwrap();
        let out = qjump(tmp.path(), &["simulate", &name]);
        assert_eq!(code(&out), 2, "case {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(files(tmp.path()).iter().all(|f| f.ends_with(".json") && f.starts_with("bad")));
    assert_eq!(code(&qjump(tmp.path(), &["simulate", "missing.json"])), 2);
}

#[test]
fn short_bitshift_seed_fails_fast_with_exit_3() {
    let tmp = TempDir::new().unwrap();
    let manifest = r#"{"schema_version":1,"n_jumps":100,
        "script":{"kind":"fixed_distribution","distribution":[0.5,0.5]},
        "driver":{"kind":"bitshift","seed":{"constant":"champernowne2","budget":10}}}"#;
    fs::write(tmp.path().join("b.json"), manifest).unwrap();
    let out = qjump(tmp.path(), &["--resolution", "64", "simulate", "b.json"]);
    assert_eq!(code(&out), 3);
    assert_eq!(files(tmp.path()), vec!["b.json"]);
}

#[test]
fn mid_run_exhaustion_exits_3_with_flagged_partial_file() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("p.json"), BASIC.replace("\"n_jumps\":3", "\"n_jumps\":5")).unwrap();
    assert_eq!(code(&qjump(tmp.path(), &["simulate", "p.json"])), 3);
    let text = fs::read_to_string(tmp.path().join("p.ndjson")).unwrap();
    assert_eq!(outcomes(&text), vec![1, 2, 3]);
    assert!(text.lines().last().unwrap().contains(r#""type":"exhausted""#));
}

#[test]
fn exact_flag_and_out_dir_override() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    fs::write(tmp.path().join("run.json"), BASIC).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qjump"))
        .args(["--exact", "simulate", "run.json"])
        .current_dir(tmp.path())
        .env("QJUMP_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(out_dir.join("run.ndjson")).unwrap();
    assert!(text.contains(r#""mode":"exact""#));
    assert!(text.contains(r#""probs":["1/2","3/10","1/5"]"#));
    assert_eq!(outcomes(&text), vec![1, 2, 3]);
}

#[test]
fn seed_command() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&qjump(tmp.path(), &["seed", "champernowne2", "12", "c.hex"])), 0);
    assert_eq!(fs::read_to_string(tmp.path().join("c.hex")).unwrap().trim(), "12:DCB");
    assert_eq!(code(&qjump(tmp.path(), &["seed", "sqrt2_frac", "4", "s.hex"])), 0);
    assert_eq!(fs::read_to_string(tmp.path().join("s.hex")).unwrap().trim(), "4:6");
    assert_eq!(code(&qjump(tmp.path(), &["seed", "champernowne2", "0", "z.hex"])), 2);
    assert_eq!(code(&qjump(tmp.path(), &["seed", "e_frac", "8", "e.hex"])), 2);
    assert!(!tmp.path().join("z.hex").exists());
}

#[test]
fn analyze_reports_and_diffs() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("run.json"), BASIC).unwrap();
    assert_eq!(code(&qjump(tmp.path(), &["simulate", "run.json"])), 0);

    let out = qjump(tmp.path(), &["analyze", "run.ndjson"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("run.report.json")).unwrap()).unwrap();
    assert_eq!(report["frequency"]["frequencies"], serde_json::json!(["1/3", "1/3", "1/3"]));
    assert!(tmp.path().join("run.report.txt").exists());

    fs::copy(tmp.path().join("run.ndjson"), tmp.path().join("copy.ndjson")).unwrap();
    let out = qjump(tmp.path(), &["analyze", "run.ndjson", "copy.ndjson"]);
    assert!(stdout(&out).contains("verdict true"), "{}", stdout(&out));

    let tampered = fs::read_to_string(tmp.path().join("run.ndjson"))
        .unwrap()
        .replace(r#""outcome":2"#, r#""outcome":3"#);
    fs::write(tmp.path().join("bad.ndjson"), tampered).unwrap();
    let out = qjump(tmp.path(), &["analyze", "run.ndjson", "bad.ndjson"]);
    let text = stdout(&out);
    assert!(text.contains("first divergent j 2") && text.contains("verdict false"), "{text}");
}

#[test]
fn analyze_schema_violation_names_the_line() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("run.json"), BASIC).unwrap();
    assert_eq!(code(&qjump(tmp.path(), &["simulate", "run.json"])), 0);
    let broken = fs::read_to_string(tmp.path().join("run.ndjson"))
        .unwrap()
        .replace(r#""j":3"#, r#""j":"three""#);
    fs::write(tmp.path().join("broken.ndjson"), broken).unwrap();
    let out = qjump(tmp.path(), &["analyze", "broken.ndjson"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
}

#[test]
fn retro_command() {
    let tmp = TempDir::new().unwrap();
    for dim in ["2", "6"] {
        let out = qjump(tmp.path(), &["retro", dim]);
        assert_eq!(code(&out), 0);
        assert!(stdout(&out).contains("verified true"));
    }
    assert_eq!(code(&qjump(tmp.path(), &["retro", "1"])), 2);
}

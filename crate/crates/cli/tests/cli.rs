use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TWO_VERTEX: &str = r#"{
  "vertices": ["d", "v"],
  "s0": {"d": "v", "v": "v"},
  "s1": {"d": "v", "v": "d"},
  "terminals": ["d"],
  "tokens": {"d": 1}
}"#;

fn garrival(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_garrival"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_simulate_two_vertex() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "two.json", TWO_VERTEX);
    let out = garrival(&["solve", s(&inst), "--strategy", "simulate"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["arrivals"]["d"], 1);
    assert_eq!(v["flow"]["v"]["even"], 1);
    assert_eq!(v["flow"]["v"]["odd"], 1);
}

#[test]
fn solve_output_verifies_and_repeats() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "two.json", TWO_VERTEX);
    for strategy in ["simulate", "recursive", "separator", "fvs"] {
        let first = garrival(&["solve", s(&inst), "--strategy", strategy]);
        let again = garrival(&["solve", s(&inst), "--strategy", strategy]);
        assert_eq!(first.stdout, again.stdout);
        let flow = write(&dir, "flow.json", std::str::from_utf8(&first.stdout).unwrap());
        let check = garrival(&["verify", s(&inst), s(&flow)]);
        assert_eq!(code(&check), 0, "{strategy}");
        assert_eq!(json(&check)["valid"], true);
    }
}

#[test]
fn separator_on_all_terminal_instance_is_base_case() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "all.json",
        r#"{"vertices": ["a", "b"], "s0": {"a": "b", "b": "a"}, "s1": {"a": "a", "b": "b"},
            "terminals": ["a", "b"], "tokens": {"a": 3, "b": 0}}"#,
    );
    let out = garrival(&["solve", s(&inst), "--strategy", "separator"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["trace"]["max_recursion_depth"], 0);
    assert_eq!(v["flow"]["a"]["even"], 2);
    assert_eq!(v["flow"]["a"]["odd"], 1);
    assert_eq!(v["arrivals"]["b"], 2);
    assert_eq!(v["arrivals"]["a"], 1);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "two.json", TWO_VERTEX);
    assert_eq!(code(&garrival(&["solve", s(&inst), "--strategy", "magic"])), 1);
    assert_eq!(code(&garrival(&["frobnicate"])), 1);
    assert_eq!(code(&garrival(&["--help"])), 0);
}

#[test]
fn invalid_instance_exits_one() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "bad.json",
        r#"{"vertices": ["d", "v"], "s0": {"d": "d", "v": "v"}, "s1": {"d": "d", "v": "v"},
            "terminals": ["d"], "tokens": {"d": 1}}"#,
    );
    let out = garrival(&["solve", s(&inst)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no terminal reachable from v"));
    assert_eq!(code(&garrival(&["solve", "/nonexistent/instance.json"])), 1);
}

#[test]
fn internal_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "two.json", TWO_VERTEX);
    let out = garrival(&["solve", s(&inst), "--step-budget", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("step budget"));
}

#[test]
fn verify_reports_violations() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "two.json", TWO_VERTEX);
    let zero = write(
        &dir,
        "zero.json",
        r#"{"flow": {"d": {"even": 0, "odd": 0}, "v": {"even": 0, "odd": 0}}}"#,
    );
    let out = garrival(&["verify", s(&inst), s(&zero)]);
    assert_eq!(code(&out), 1);
    let report = json(&out);
    assert_eq!(report["valid"], false);
    let kinds: Vec<&str> = report["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["kind"].as_str().unwrap())
        .collect();
    assert!(kinds.contains(&"source constraint"));

    let other = write(
        &dir,
        "other.json",
        r#"{"flow": {"d": {"even": 1, "odd": 0}, "w": {"even": 1, "odd": 1}}}"#,
    );
    let out = garrival(&["verify", s(&inst), s(&other)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("key mismatch"));
}

#[test]
fn contraction_reports_parameters() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "two.json", TWO_VERTEX);
    let out = garrival(&["solve", s(&inst), "--strategy", "contraction"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["arrivals"]["d"], 1);
    assert_eq!(v["lambda"], "35/36");
    assert_eq!(v["delta"], "1/4");
    assert_eq!(v["eps"], "1/288");
    assert!(v.get("flow").is_none());
    assert!(v["iterations"].as_u64().unwrap() >= 1);
    let out = garrival(&["solve", s(&inst), "--strategy", "contraction", "--lambda", "1/2"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn huge_counts_are_strings() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "huge.json",
        r#"{"vertices": ["d", "v"], "s0": {"d": "v", "v": "v"}, "s1": {"d": "v", "v": "d"},
            "terminals": ["d"], "tokens": {"d": "36893488147419103232"}}"#,
    );
    let out = garrival(&["solve", s(&inst), "--strategy", "simulate"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["arrivals"]["d"], "36893488147419103232");
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--n", "9", "--terminals", "3", "--tokens", "5", "--family", "low_fvs", "--seed", "17"];
    let a = garrival(&args);
    let b = garrival(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = garrival(&["gen", "--n", "9", "--terminals", "3", "--tokens", "5", "--family", "low_fvs", "--seed", "18"]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(code(&garrival(&["gen", "--n", "2", "--terminals", "3"])), 1);
}

#[test]
fn acyclic_family_needs_no_fvs_probes() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let seed = seed.to_string();
        let gen = garrival(&["gen", "--n", "8", "--terminals", "2", "--family", "acyclic", "--seed", &seed]);
        let inst = write(&dir, "acyclic.json", std::str::from_utf8(&gen.stdout).unwrap());
        let out = garrival(&["solve", s(&inst), "--strategy", "fvs"]);
        assert_eq!(code(&out), 0);
        assert_eq!(json(&out)["trace"]["binary_search_probes"], 0);
    }
}

#[test]
fn low_treewidth_separators_are_small() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let seed = seed.to_string();
        let gen = garrival(&["gen", "--n", "12", "--terminals", "4", "--family", "low_treewidth", "--seed", &seed]);
        let inst = write(&dir, "tw.json", std::str::from_utf8(&gen.stdout).unwrap());
        let out = garrival(&["solve", s(&inst), "--strategy", "separator"]);
        assert_eq!(code(&out), 0);
        assert!(json(&out)["trace"]["max_separator_size"].as_u64().unwrap() <= 3);
    }
}

#[test]
fn crosscheck_agrees_on_generated_instances() {
    let out = garrival(&["crosscheck", "--n", "7", "--terminals", "3", "--tokens", "6", "--count", "20"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["agree"], true);
    assert_eq!(v["instances"].as_array().unwrap().len(), 20);
    let alone = garrival(&["crosscheck", "--strategies", "simulate", "--count", "3"]);
    assert_eq!(code(&alone), 0);
}

#[test]
fn bench_row_count_and_columns() {
    let out = garrival(&[
        "bench", "--n", "6", "--terminals", "2", "--family", "acyclic", "--seed", "4", "--count", "3",
        "--strategies", "simulate,fvs", "--reps", "2",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seed,n,strategy,wall_ns,depth,probes,splits,iterations"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    assert_eq!(rows[0][0], "4");
    assert_eq!(rows[0][2], "simulate");
    assert_eq!(rows[2][2], "fvs");
    for row in rows.iter().filter(|r| r[2] == "fvs") {
        assert_eq!(row[5], "0");
    }
}

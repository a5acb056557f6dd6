use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_disclose"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn examples() -> PathBuf {
    repo().join("docs/examples")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

const TINY_HISTOGRAM: &str = r#"{
  "nodes": [
    {"id": "src", "op": "source", "params": {"table": "t"}},
    {"id": "bins", "op": "classify", "params": {"column": "x", "bins": {"explicit_edges": [0, 2, 4, 6]}}},
    {"id": "hist", "op": "aggregate", "params": {"group_by": ["x__bin"], "stats": [{"stat": "count"}]}}
  ],
  "edges": [["src", "bins", 0], ["bins", "hist", 0]],
  "outputs": ["hist"]
}"#;

#[test]
fn run_writes_one_row_per_bin() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("p.json");
    let csv = dir.path().join("t.csv");
    std::fs::write(&spec, TINY_HISTOGRAM).unwrap();
    std::fs::write(&csv, "x\n0.5\n1\n2\n3.5\n5\n6\n").unwrap();
    let out = dir.path().join("out");
    let r = run(&[
        "run",
        "--spec",
        spec.to_str().unwrap(),
        "--input",
        &format!("t={}", csv.display()),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    // [0,2): 0.5, 1   [2,4): 2, 3.5   [4,6]: 5, 6
    let hist = std::fs::read_to_string(out.join("hist.csv")).unwrap();
    assert_eq!(hist, "x__bin,count\n\"[0, 2)\",2\n\"[2, 4)\",2\n\"[4, 6]\",2\n");
    assert!(out.join("report.json").exists() && out.join("report.txt").exists());
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ex = examples();
    for name in ["a", "b"] {
        let r = run(&[
            "run",
            "--spec",
            ex.join("contour.json").to_str().unwrap(),
            "--input",
            &format!("points={}", ex.join("data/points.csv").display()),
            "--seed",
            "7",
            "--out",
            dir.path().join(name).to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = tree(&dir.path().join("a"));
    assert!(!a.is_empty());
    assert_eq!(a, tree(&dir.path().join("b")));
}

#[test]
fn invalid_spec_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    // kde on a density is a kind mismatch
    std::fs::write(
        &spec,
        r#"{
  "nodes": [
    {"id": "src", "op": "source", "params": {"table": "t"}},
    {"id": "k1", "op": "smooth_kde", "params": {"columns": ["x"], "bandwidth": ["auto"], "grid": [{"n": 16}]}},
    {"id": "k2", "op": "smooth_kde", "params": {"columns": ["x"], "bandwidth": ["auto"], "grid": [{"n": 16}]}}
  ],
  "edges": [["src", "k1", 0], ["k1", "k2", 0]],
  "outputs": ["k2"]
}"#,
    )
    .unwrap();
    let csv = dir.path().join("t.csv");
    std::fs::write(&csv, "x\n1\n2\n").unwrap();
    let out = dir.path().join("out");
    let r = run(&[
        "run",
        "--spec",
        spec.to_str().unwrap(),
        "--input",
        &format!("t={}", csv.display()),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("k2"));
    assert!(!out.exists());
}

#[test]
fn syntax_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(&spec, "{\"nodes\": [}").unwrap();
    let r = run(&["analyze", "--spec", spec.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn missing_binding_exits_2() {
    let ex = examples();
    let dir = tempfile::tempdir().unwrap();
    let r = run(&[
        "run",
        "--spec",
        ex.join("histogram.json").to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("--input tons="));
}

#[test]
fn analyze_flags_magnitude_adjustment_and_dropped_column() {
    let r = run(&["analyze", "--spec", examples().join("vsup_adjust.json").to_str().unwrap()]);
    assert!(r.status.success());
    let v: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    let rules: Vec<(&str, &str)> = v["findings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["rule_id"].as_str().unwrap(), f["category"].as_str().unwrap()))
        .collect();
    assert!(rules.contains(&("R4", "Jumbler")));
    assert!(rules.contains(&("R6", "HallucinatorRisk")));
    let county = v["outputs"][0]["columns"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["column"] == "county")
        .unwrap();
    assert_eq!(county["status"], "hidden");
}

#[test]
fn sweep_writes_pareto_table() {
    let ex = examples();
    let dir = tempfile::tempdir().unwrap();
    let r = run(&[
        "sweep",
        "--spec",
        ex.join("sweep.json").to_str().unwrap(),
        "--input",
        &format!("points={}", ex.join("data/points.csv").display()),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",true")));
}

#[test]
fn render_rejects_incompatible_chart() {
    let ex = examples();
    let dir = tempfile::tempdir().unwrap();
    let r = run(&[
        "render",
        "--spec",
        ex.join("histogram.json").to_str().unwrap(),
        "--input",
        &format!("tons={}", ex.join("data/tons.csv").display()),
        "--chart",
        "scatter",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("compatible chart kinds: histogram"));
}

#[test]
fn unknown_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["scenario", "bob", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

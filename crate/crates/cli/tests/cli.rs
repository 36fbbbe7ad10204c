use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glauber-nm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn verify_on_the_cycle_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["verify", "--graph", "cycle:12", "--k", "4", "--seed", "7", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(rep["seed"], 7);
    assert!(rep["checks"].as_array().unwrap().iter().all(|c| c["failures"] == 0));
}

#[test]
fn simulate_with_zero_steps_echoes_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let x0 = dir.path().join("x0.txt");
    fs::write(&x0, "5 3\n1 2 3 1 2\n").unwrap();
    let o = run(&["simulate", "--graph", "path:5", "--k", "3", "--steps", "0", "--x0", x0.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["final"], serde_json::json!([1, 2, 3, 1, 2]));
    assert_eq!(v["initial"], v["final"]);
}

#[test]
fn simulate_is_reproducible_and_emits_csv() {
    let args = ["simulate", "--graph", "cycle:9", "--k", "4", "--steps", "500", "--seed", "3", "--format", "csv"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("v,initial,final"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn couple_rejects_non_neighboring_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let x0 = dir.path().join("x0.txt");
    let y0 = dir.path().join("y0.txt");
    fs::write(&x0, "4 3\n1 2 1 2\n").unwrap();
    fs::write(&y0, "4 3\n3 1 3 1\n").unwrap();
    let o = run(&["couple", "--graph", "path:4", "--k", "3", "--x0", x0.to_str().unwrap(), "--y0", y0.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn couple_emits_a_trace() {
    let o = run(&["couple", "--graph", "cycle:12", "--k", "4", "--seed", "5", "--steps", "60"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 60);
    assert!(v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"graph": {"kind": "cycle", "n": 12}, "k": 4, "gamma": 2.0}"#).unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
    fs::write(&cfg, r#"{"graph": {"kind": "cycle", "n": 12}, "k": "four"}"#).unwrap();
    let o = run(&["mix", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("four"));
}

#[test]
fn missing_graph_is_an_input_error() {
    assert_eq!(run(&["simulate", "--k", "3"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--graph", "hexagon:3", "--k", "3"]).status.code(), Some(2));
}

#[test]
fn uniformity_audit_writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["uniformity", "--graph", "tree:40", "--k", "8", "--steps", "2000", "--format", "csv", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("uniformity.csv")).unwrap();
    assert!(text.starts_with("v,condition,"));
}

#[test]
fn block_experiment_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["mix", "--experiment", "block", "--graph", "cycle:20", "--k", "5", "--replicas", "8", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let plot = fs::read_to_string(dir.path().join("block_plot.csv")).unwrap();
    assert_eq!(plot.lines().next(), Some("block,mean_dist,lo,hi"));
    assert_eq!(plot.lines().count(), 1 + 5);
    assert!(dir.path().join("block.json").exists());
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairband")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name).display().to_string();
    let mut args = vec!["gen-scenario", "--output", &path];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn gen_scenario_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.json", &["--seed", "42"]);
    let b = gen(dir.path(), "b.json", &["--seed", "42"]);
    let c = gen(dir.path(), "c.json", &["--seed", "43"]);
    let (a, b, c) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), std::fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);

    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["manifest"]["seed"], 42);
    assert_eq!(v["manifest"]["version"], env!("CARGO_PKG_VERSION"));
    let users = v["scenario"]["users"].as_array().unwrap();
    assert_eq!(users.len(), 16);
    for u in users {
        for k in 0..2 {
            let x = u["position"][k].as_f64().unwrap();
            assert!((0.0..=500.0).contains(&x));
        }
    }
}

#[test]
fn minimal_scenario_solves() {
    let dir = tempfile::tempdir().unwrap();
    let sc = gen(dir.path(), "two.json", &["--n", "2", "--seed", "1"]);
    let o = run(&["solve", "--scenario", &sc]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["feasible"], true);
    assert_eq!(v["result"]["candidates_tried"], 1);
    assert_eq!(v["result"]["matching"]["pairs"], serde_json::json!([[0, 1]]));
    assert!(v["result"]["allocation"]["theta_star"].is_number());
}

#[test]
fn solve_record_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sc = gen(dir.path(), "s.json", &["--n", "8", "--seed", "3"]);
    let a = run(&["solve", "--scenario", &sc, "--strategy", "random_equal", "--seed", "9"]);
    let b = run(&["solve", "--scenario", &sc, "--strategy", "random_equal", "--seed", "9"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["manifest"]["seed"], 9);
    assert_eq!(v["config"]["n_users"], 8);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let sc = gen(dir.path(), "s.json", &["--n", "4"]);
    assert_eq!(code(&run(&["solve", "--scenario", &sc, "--strategy", "bogus"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["sweep", "--bmax", "10M,5M", "--seeds", "1"])), 2);
    assert_eq!(code(&run(&["sweep", "--bmax", "", "--seeds", "1"])), 2);

    let missing = dir.path().join("nope.json").display().to_string();
    assert_eq!(code(&run(&["solve", "--scenario", &missing])), 3);
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{ not json").unwrap();
    assert_eq!(code(&run(&["solve", "--scenario", &junk.display().to_string()])), 3);
    assert_eq!(code(&run(&["gen-scenario", "--n", "5"])), 3);

    let o = run(&["solve", "--scenario", &sc, "--tmax", "0.01"]);
    assert_eq!(code(&o), 4);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["feasible"], false);
    // Baselines report infeasibility without failing.
    assert_eq!(code(&run(&["solve", "--scenario", &sc, "--tmax", "0.01", "--strategy", "greedy_equal"])), 0);
}

#[test]
fn distortion_file_replaces_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("d.txt");
    let mut text = String::from("# hand-made\nn 4\nunits mse\n");
    for i in 0..4 {
        for j in (i + 1)..4 {
            let v = if (i, j) == (0, 3) || (i, j) == (1, 2) { 0.01 } else { 0.2 };
            text += &format!("{i} {j} {v} {v}\n");
        }
    }
    std::fs::write(&table, text).unwrap();
    let t = table.display().to_string();
    let sc = gen(dir.path(), "s.json", &["--n", "4", "--distortion-file", &t]);
    let o = run(&["solve", "--scenario", &sc]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["matching"]["pairs"], serde_json::json!([[0, 3], [1, 2]]));

    std::fs::write(&table, "n 4\nunits mse\n0 1 0.1 0.1\n").unwrap();
    assert_eq!(code(&run(&["gen-scenario", "--n", "4", "--distortion-file", &t])), 3);
}

#[test]
fn single_cell_sweep_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let sc = gen(dir.path(), "s.json", &["--n", "8", "--seed", "5"]);
    let o = run(&["sweep", "--scenario", &sc, "--bmax", "10M", "--strategy", "proposed", "--seed", "5", "--seeds", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("# manifest") && l.contains("\"seed\":5")));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("b_max_hz,strategy"));
    let fields: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(fields[1], "proposed");

    let s = run(&["solve", "--scenario", &sc, "--bmax", "10M"]);
    let v: Value = serde_json::from_slice(&s.stdout).unwrap();
    let direct = v["result"]["total_distortion"].as_f64().unwrap();
    assert_eq!(fields[5].parse::<f64>().unwrap(), direct);
}

#[test]
fn default_sweep_shape() {
    let o = run(&["sweep", "--n", "6", "--seeds", "2"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 8 * 5);
}

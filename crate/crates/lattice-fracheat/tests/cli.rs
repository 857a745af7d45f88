use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lattice-fracheat"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lattice-fracheat-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path5() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/data/path5.json").to_string()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn kernel_csv_sums_to_one() {
    let dir = scratch("kernel");
    let o = run(&["kernel", "--d", "1", "--s", "0.5", "--t", "64", "--tol", "1e-10"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.join("kernel_d1_s0p5_t64.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,value"));
    let (mut total, mut min) = (0.0, f64::INFINITY);
    for line in lines {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        total += v;
        min = min.min(v);
    }
    assert!((total - 1.0).abs() < 1e-10, "{total}");
    assert!(min > 0.0);
    let header = json(dir.join("kernel_d1_s0p5_t64.json"));
    assert_eq!(header["d"], 1);
    assert_eq!(header["N"].as_u64().unwrap() % 2, 1);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn usage_errors_exit_two() {
    let dir = scratch("usage");
    for args in [
        vec!["kernel", "--d", "4", "--s", "0.5"],
        vec!["kernel", "--s", "1.5"],
        vec!["kernel", "--tol", "0.5"],
        vec!["rates", "--times", "1"],
        vec!["rates", "--p", "0.5"],
        vec!["rates", "--accuracy", "fast"],
        vec!["counterexample", "--phi", "t^2"],
        vec!["dirichlet", "--graph", "path:5"],
        vec!["positivity", "--graph", "path:5", "--omega", "mid9"],
        vec!["frobnicate"],
    ] {
        let o = run(&args, &dir);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unreadable_inputs_exit_one() {
    let dir = scratch("io");
    let missing = dir.join("missing.json");
    let o = run(&["dirichlet", "--graph", missing.to_str().unwrap(), "--omega", "mid3"], &dir);
    assert_eq!(o.status.code(), Some(1));
    let o = bin().arg("--config").arg(&missing).arg("kernel").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rate_assertion_passes_for_local_kernel() {
    let dir = scratch("rates");
    let o = run(&["rates", "--datum", "shift-e1", "--d", "1", "--s", "1", "--p", "inf", "--assert"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("slope -0.500"));
    let csv = std::fs::read_to_string(dir.join("rates_d1_s1_pinf.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn impossible_slope_tolerance_fails_assertion() {
    let dir = scratch("strict");
    let o = run(&["rates", "--d", "1", "--s", "1", "--p", "2", "--slope-tol", "1e-9", "--assert"], &dir);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn optimality_constant_approaches_cauchy_value() {
    let dir = scratch("optimality");
    let o = run(&["rates", "--mode", "optimality", "--p", "1", "--s", "0.5", "--format", "json"], &dir);
    assert_eq!(o.status.code(), Some(0));
    let v = json(dir.join("optimality_d1_s0p5_p1.json"));
    let c = v["converged"].as_f64().unwrap();
    assert!((c - 2.0 / std::f64::consts::PI).abs() < 1e-3, "{c}");
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = scratch("config");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"rates": {"d": 1, "s": 0.5, "p": "inf", "times": "2^4..2^9", "format": "json"}}"#).unwrap();
    let o = bin().arg("--config").arg(&cfg).args(["rates", "--s", "1"]).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v = json(dir.join("rates_d1_s1.json"));
    assert_eq!(v["s"], 1.0);
    assert_eq!(v["reports"][0]["times"].as_array().unwrap().len(), 6);
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = bin().arg("--config").arg(&cfg).arg("rates").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    let args = ["rates", "--d", "1", "--s", "0.5", "--times", "2^4..2^9", "--format", "json", "--jobs", "3"];
    assert_eq!(run(&args, &a).status.code(), Some(0));
    assert_eq!(run(&args[..9], &b).status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("rates_d1_s0p5.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn counterexample_levels_verify() {
    let dir = scratch("counter");
    let o = run(&["counterexample", "--phi", "t^-0.25", "--kmax", "4", "--assert"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(dir.join("counterexample_d1_s1_k4.json"));
    let bounds = v["bounds"].as_array().unwrap();
    assert_eq!(bounds.len(), 4);
    assert!(bounds.iter().all(|b| b["pass"] == true));
    for key in ["rho_star", "c_star", "t_star", "times", "sites", "masses"] {
        assert!(!v["datum"][key].is_null(), "{key}");
    }
}

#[test]
fn logarithmic_profile_hits_resource_cap() {
    let dir = scratch("counter-log");
    let o = run(&["counterexample", "--phi", "1/log(e+t)", "--kmax", "4"], &dir);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn dirichlet_gap_assertion() {
    let dir = scratch("dirichlet");
    let o = run(&["dirichlet", "--graph", &path5(), "--omega", "mid3", "--s", "1", "--assert-gap"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(dir.join("dirichlet_s1.json"));
    let mu2 = v["mu2"].as_f64().unwrap();
    assert!((mu2 - 2.0).abs() < 1e-10);
    let slope = v["remainder"]["slope"].as_f64().unwrap();
    assert!((slope / -mu2 - 1.0).abs() < 0.01);
    assert_eq!(v["omega"], serde_json::json!(["1", "2", "3"]));
}

#[test]
fn positivity_reports_positive_minimum() {
    let dir = scratch("positivity");
    let o = run(&["positivity", "--graph", &path5(), "--omega", "mid3", "--s", "0.5", "--assert"], &dir);
    assert_eq!(o.status.code(), Some(0));
    let v = json(dir.join("positivity_s0p5.json"));
    assert!(v["min_entry"].as_f64().unwrap() > 0.0);
    assert_eq!(v["complete_pattern"], true);
    let o = run(&["positivity", "--graph", "grid:5", "--omega", "6,7,8,11,12,13,16,17,18", "--s", "1", "--format", "csv"], &dir);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.join("positivity_s1.csv")).unwrap().lines().count(), 4);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use annihilate_lab::output::Table;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_annihilate-lab"));
    c.env_remove("ANNIHILATE_LAB_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn annihilate-lab")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const CRITICAL: &str = r#"
experiment = "critical-line"
graph = "line"
p = 0.5
t_grid = [4.0, 8.0, 16.0, 32.0]
replicas = 24
seed = 11
"#;

fn simulate(dir: &Path, config: &Path, out: &str, workers: &str) -> PathBuf {
    let out = dir.join(out);
    let o = run(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn simulate_writes_outputs_and_replays_with_other_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", CRITICAL);
    let out = simulate(tmp.path(), &cfg, "a", "1");
    for f in ["manifest.json", "replicas.csv", "summary.csv", "fit.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let again = simulate(tmp.path(), &cfg, "b", "3");
    for f in ["replicas.csv", "summary.csv", "fit.json"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
    let manifest = out.join("manifest.json");
    for w in ["1", "2", "4"] {
        let o = run(&["replay", manifest.to_str().unwrap(), "--workers", w]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let r = stdout_json(&o);
        assert_eq!(r["identical"], true);
        assert_eq!(r["workers"], w.parse::<u64>().unwrap());
    }
    let summary = Table::read(&out.join("summary.csv")).unwrap();
    assert_eq!(summary.rows.len(), 4);
    let m: Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(m["seeds"].as_array().unwrap().len(), 24);
}

#[test]
fn replay_detects_tampering_and_refuses_other_versions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", CRITICAL);
    let out = simulate(tmp.path(), &cfg, "a", "2");
    let text = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    let mut m: Value = serde_json::from_str(&text).unwrap();

    m["files"]["summary.csv"] = Value::from("00");
    let bad = write_config(tmp.path(), "tampered.json", &m.to_string());
    let o = run(&["replay", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = stdout_json(&o);
    assert_eq!(r["files"]["summary.csv"], false);
    assert_eq!(r["files"]["replicas.csv"], true);

    m["code_version"] = Value::from("0.0.0-other");
    let old = write_config(tmp.path(), "old.json", &m.to_string());
    let o = run(&["replay", old.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing"));
}

#[test]
fn changed_seed_changes_data_not_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let a = simulate(tmp.path(), &write_config(tmp.path(), "a.toml", CRITICAL), "a", "1");
    let b = simulate(tmp.path(), &write_config(tmp.path(), "b.toml", &CRITICAL.replace("seed = 11", "seed = 12")), "b", "1");
    let ta = Table::read(&a.join("replicas.csv")).unwrap();
    let tb = Table::read(&b.join("replicas.csv")).unwrap();
    assert_eq!(ta.header, tb.header);
    assert_eq!(ta.rows.len(), tb.rows.len());
    assert_ne!(ta.rows, tb.rows);
}

#[test]
fn fit_subcommand_matches_fit_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = simulate(tmp.path(), &write_config(tmp.path(), "c.toml", CRITICAL), "a", "1");
    let o = run(&["fit", "--input", out.join("summary.csv").to_str().unwrap(), "--x", "t", "--y", "mean_V", "--form", "power"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = stdout_json(&o);
    let saved: Value = serde_json::from_slice(&std::fs::read(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["slope"], saved["V_vs_t"]["slope"]);
    assert_eq!(fit["points"], 4);

    let o = run(&["fit", "--input", out.join("replicas.csv").to_str().unwrap(), "--x", "t", "--y", "V_t", "--where", "replica=0", "--form", "log"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["points"], 4);
}

#[test]
fn all_a_line_fills_the_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &CRITICAL.replace("p = 0.5", "p = 1.0"));
    let out = simulate(tmp.path(), &cfg, "a", "1");
    let s = Table::read(&out.join("summary.csv")).unwrap();
    let t = s.floats("t", None).unwrap();
    let v = s.floats("mean_V", None).unwrap();
    let se = s.floats("stderr_V", None).unwrap();
    for i in 0..t.len() {
        assert!((v[i] - t[i]).abs() < 4.0 * se[i], "t={} V={} se={}", t[i], v[i], se[i]);
    }
}

#[test]
fn torus_compare_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "t.toml",
        r#"
experiment = "torus-compare"
graph = "line"
p = 0.5
lambda_b = 1.0
t_grid = [4.0, 16.0, 64.0]
replicas = 200
seed = 5
"#,
    );
    let out = simulate(tmp.path(), &cfg, "a", "2");
    let fit: Value = serde_json::from_slice(&std::fs::read(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["surplus_violations"], 0);
    assert!(fit["max_abs_z_N"].as_f64().unwrap() < 4.0);
    assert!(fit["max_abs_z_V"].as_f64().unwrap() < 4.0);
    assert_eq!(Table::read(&out.join("summary.csv")).unwrap().rows.len(), 3);
}

#[test]
fn invalid_configs_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("order.toml", CRITICAL.replace("[4.0, 8.0, 16.0, 32.0]", "[8.0, 4.0]")),
        ("replicas.toml", CRITICAL.replace("replicas = 24", "replicas = 1")),
        ("unknown.toml", format!("{CRITICAL}\nbogus = 1\n")),
        ("truncation.toml", format!("{CRITICAL}\ntruncation_c = 0.5\n")),
    ] {
        let cfg = write_config(tmp.path(), name, &text);
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name} accepted");
    }
}

#[test]
fn verify_couplings_reports_json() {
    let o = run(&["verify-couplings", "--check", "path-swap", "--trials", "10", "--graph", "line", "--lambda-b", "1", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = stdout_json(&o);
    assert_eq!(r["check"], "path-swap");
    assert_eq!(r["trials"], 10);
    assert_eq!(r["failures"], 0);
    assert!(r["first_counterexample"].is_null());

    let o = run(&["verify-couplings", "--check", "monotone", "--trials", "5", "--graph", "lattice:2", "--radius", "3", "--t", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&["verify-couplings", "--check", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["verify-couplings", "--check", "sequential", "--lambda-b", "1", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(2), "sequential process needs stationary B");
}

#[test]
fn tree_exact_writes_table_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("r.json");
    let o = run(&["tree-exact", "--d", "2", "--p", "0.5", "--n-max", "20", "--report", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = Table::from_bytes(&o.stdout).unwrap();
    assert_eq!(t.header, ["n", "mean", "zero_mass", "dropped_tail"]);
    assert_eq!(t.rows.len(), 21);
    assert_eq!(t.rows[1][1], "0.5");
    let r: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["violations"], 0);
    assert!((r["q"].as_f64().unwrap() - 0.0834).abs() < 1e-3);

    let o = run(&["tree-exact", "--d", "2", "--p", "0.5", "--n-max", "5", "--checks", "growth,typo"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_formulas_tables() {
    let o = run(&["exact-formulas", "--what", "uplus", "--p-grid", "0.3,0.4"]);
    assert!(o.status.success());
    let t = Table::from_bytes(&o.stdout).unwrap();
    let scaled = t.floats("scaled", None).unwrap();
    assert!((scaled[0] - 0.42).abs() < 1e-9 && (scaled[1] - 0.48).abs() < 1e-9);

    let o = run(&["exact-formulas", "--what", "discrepancy", "--k", "2", "--p", "0.5"]);
    let t = Table::from_bytes(&o.stdout).unwrap();
    assert_eq!(t.floats("probability", None).unwrap(), vec![0.25, 0.5, 0.25]);

    let o = run(&["exact-formulas", "--what", "gr", "--a", "2", "--x", "3"]);
    let t = Table::from_bytes(&o.stdout).unwrap();
    assert_eq!(t.floats("probability", None).unwrap(), vec![0.4]);

    let o = run(&["exact-formulas", "--what", "uk", "--k-max", "3", "--p", "0.3"]);
    assert_eq!(Table::from_bytes(&o.stdout).unwrap().rows.len(), 4);

    for what in ["devr", "rw"] {
        assert!(run(&["exact-formulas", "--what", what]).status.success(), "{what}");
    }
}

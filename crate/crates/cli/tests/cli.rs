use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fogplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogplace"))
        .args(args)
        .env_remove("FOGPLACE_OUT")
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "seed = 3\n\n[topology]\nnodes = 60\n\n[workload]\nprofiles = [0, 1]\n\n[epos]\niterations = 10\n\n[grid]\nnodes = [60]\nhop_limits = [3]\nlambdas = [0.0]\ndistributions = [\"rand\"]\ntopologies = [\"BA\"]\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn validate_accepts_defaults_and_rejects_bad_values() {
    let o = fogplace(&["validate"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("config ok"));
    assert_eq!(code(&fogplace(&["validate", "--set", "epos.lambda=2"])), 1);
    assert_eq!(code(&fogplace(&["validate", "--set", "epos.nonsense=1"])), 1);
    assert_eq!(code(&fogplace(&["validate", "--config", "/no/such/file.toml"])), 1);
}

#[test]
fn unknown_flag_and_help() {
    assert_eq!(code(&fogplace(&["run", "--bogus"])), 1);
    assert_eq!(code(&fogplace(&["frobnicate"])), 1);
    assert_eq!(code(&fogplace(&["--help"])), 0);
    assert_eq!(code(&fogplace(&["--version"])), 0);
}

#[test]
fn run_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = fogplace(&["run", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["metrics.csv", "summary.json", "config.toml", "iterations_r0.csv"] {
        let x = fs::read(a.join(f)).unwrap();
        assert_eq!(x, fs::read(b.join(f)).unwrap(), "{f}");
    }
    let metrics = fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("round,metric,value\n"));
    assert!(metrics.contains("all,variance_overall,"));
}

#[test]
fn seed_flag_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    fogplace(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]);
    fogplace(&["run", "--config", &cfg, "--seed", "4", "--out", b.to_str().unwrap()]);
    let conf = fs::read_to_string(b.join("config.toml")).unwrap();
    assert!(conf.contains("seed = 4"));
    assert_ne!(
        fs::read(a.join("metrics.csv")).unwrap(),
        fs::read(b.join("metrics.csv")).unwrap()
    );
}

#[test]
fn non_empty_output_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("out");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("stale.txt"), "x").unwrap();
    let out_s = out.to_str().unwrap();
    assert_eq!(code(&fogplace(&["run", "--config", &cfg, "--out", out_s])), 1);
    assert!(out.join("stale.txt").exists());
    let o = fogplace(&["run", "--config", &cfg, "--out", out_s, "--force"]);
    assert_eq!(code(&o), 0);
    assert!(!out.join("stale.txt").exists());
    assert!(out.join("metrics.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_fogplace"))
        .args(["gen-topology", "--config", &cfg])
        .env("FOGPLACE_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("edges.txt").exists());
    assert!(out.join("nodes.csv").exists());
    assert_eq!(code(&fogplace(&["gen-topology", "--config", &cfg])), 1);
}

#[test]
fn gen_workload_writes_requests() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("w");
    let o = fogplace(&["gen-workload", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(out.join("profiles.csv").exists());
    let reqs = fs::read_to_string(out.join("requests_p1.csv")).unwrap();
    assert!(reqs.lines().count() > 1);
    assert!(!out.join("requests_p2.csv").exists());
}

#[test]
fn export_plans_dumps_rounds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("p");
    let o = fogplace(&[
        "export-plans", "--config", &cfg, "--out", out.to_str().unwrap(), "--parallel", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for r in ["round0", "round1"] {
        let sel = fs::read_to_string(out.join(r).join("selected.csv")).unwrap();
        assert!(sel.starts_with("agent,plan\n"));
        let agent = sel.lines().nth(1).unwrap().split(',').next().unwrap();
        assert!(out.join(r).join(format!("agent{agent}.plans")).exists());
        assert!(out.join(r).join("iterations.csv").exists());
    }
}

#[test]
fn grid_writes_comparison_and_figures() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("g");
    let o = fogplace(&["grid", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cmp = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert!(cmp.lines().count() >= 3);
    for f in [
        "fig6_variance_difference.csv",
        "fig7_fog_utilization.csv",
        "fig8_delay_difference.csv",
        "fig9_variance_error.csv",
    ] {
        assert!(out.join("figures").join(f).exists(), "{f}");
    }
}

#[test]
fn grid_without_strategies_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = tmp.path().join("g");
    let o = fogplace(&[
        "grid", "--config", &cfg, "--out", out.to_str().unwrap(), "--set", "grid.strategies=[]",
    ]);
    assert_eq!(code(&o), 1);
}

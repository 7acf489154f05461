use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_SWEEP: &str = r#"
master_seed = 11
dt = 0.01

[drift]
family = "ou"
slope = 0.5

[payoff]
family = "sim_tent"
beta = 0.5
y1 = 0.1
zeta = 2.0

[sweep]
horizons = [20.0, 40.0, 80.0, 160.0]
replications = 4
betas = [0.5, 0.75]
"#;

fn stoplab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stoplab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("STOPLAB_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn sweep_into(dir: &Path, config: &Path, out: &str, extra: &[&str]) -> Output {
    let out = dir.join(out);
    let mut args = vec!["regret-sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    stoplab(&args, dir)
}

#[test]
fn sweep_writes_records_summary_figure_and_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_SWEEP);
    let out = sweep_into(dir.path(), &cfg, "out", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let records = fs::read_to_string(dir.path().join("out/records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(lines.next(), Some("T,beta,replication,y_hat,regret,seed,error"));
    assert_eq!(lines.count(), 4 * 4 * 2);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 2);
    assert!(summary[0]["slope"].is_number());

    let figure = fs::read_to_string(dir.path().join("out/figure.csv")).unwrap();
    assert!(figure.starts_with("x,y,beta,n_reps,stderr"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "regret-sweep");
    assert_eq!(manifest["master_seed"], 11);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_SWEEP);
    assert!(sweep_into(dir.path(), &cfg, "a", &[]).status.success());
    assert!(sweep_into(dir.path(), &cfg, "b", &["--threads", "1"]).status.success());
    for name in ["records.csv", "figure.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_SWEEP);
    assert!(sweep_into(dir.path(), &cfg, "a", &[]).status.success());
    assert!(sweep_into(dir.path(), &cfg, "b", &["--seed", "12"]).status.success());
    let a: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("b/manifest.json")).unwrap()).unwrap();
    assert_eq!(b["master_seed"], 12);
    assert_ne!(a["config_hash"], b["config_hash"]);
    assert_ne!(
        fs::read(dir.path().join("a/records.csv")).unwrap(),
        fs::read(dir.path().join("b/records.csv")).unwrap()
    );
}

#[test]
fn missing_drift_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "master_seed = 1\n");
    let out = stoplab(&["pac", "--config", cfg.to_str().unwrap(), "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "config");
    assert!(err["error"].as_str().unwrap().contains("drift"));
    assert!(dir.path().join("out/error.json").exists());
    assert!(!dir.path().join("out/manifest.json").exists());
}

#[test]
fn bad_key_path_is_reported() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &SMALL_SWEEP.replace("replications = 4", "replications = -4"));
    let out = sweep_into(dir.path(), &cfg, "out", &[]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["path"], "sweep.replications");
}

#[test]
fn missing_section_for_subcommand() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_SWEEP);
    let out = stoplab(&["cumulative", "--config", cfg.to_str().unwrap(), "--out", "out"], dir.path());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "config");
    assert_eq!(err["path"], "cumulative");
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "pac.toml",
        "master_seed = 0\n[drift]\nfamily = \"ou\"\nslope = 0.5\n[pac]\nbetas = [0.5]\neps = [0.1]\ndelta = [0.36787944117144233]\n",
    );
    let out = Command::new(env!("CARGO_BIN_EXE_stoplab"))
        .args(["pac", "--config", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .env("STOPLAB_OUT", dir.path().join("env_out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pac = fs::read_to_string(dir.path().join("env_out/pac.csv")).unwrap();
    let row: Vec<f64> = pac.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let want = 80.0 * std::f64::consts::E;
    assert!((row[3] - want).abs() / want < 1e-9);
}

#[test]
fn estimate_from_tabulated_csv_inputs() {
    let dir = TempDir::new().unwrap();
    // OU(0.5) written out as a table, and a tent payoff tabulated by hand.
    let mut drift = String::from("x,b\n");
    for i in 0..=400 {
        let x = -10.0 + 0.05 * i as f64;
        drift.push_str(&format!("{x},{}\n", -0.5 * x));
    }
    fs::write(dir.path().join("drift.csv"), drift).unwrap();
    let mut payoff = String::new();
    for i in 0..=300 {
        let x = 0.01 * i as f64;
        payoff.push_str(&format!("{x},{}\n", 1.0 - (1.0 - x).abs()));
    }
    fs::write(dir.path().join("payoff.csv"), payoff).unwrap();
    let cfg = write_config(
        dir.path(),
        "tab.toml",
        r#"
master_seed = 3
[drift]
family = "tabulated"
csv = "drift.csv"
class_c = 1.0
class_a = 5.0
class_gamma = 0.5
[payoff]
family = "tabulated"
csv = "payoff.csv"
y1 = 0.1
zeta = 2.0
[estimate]
horizon = 500.0
"#,
    );
    let out = stoplab(&["estimate", "--config", cfg.to_str().unwrap(), "--out", "out"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/estimate.json")).unwrap()).unwrap();
    let y_hat = est["y_hat"].as_f64().unwrap();
    assert!((0.1..=2.0).contains(&y_hat));
    let table = fs::read_to_string(dir.path().join("out/estimate.csv")).unwrap();
    assert!(table.starts_with("x,rho_hat,F_hat,xi_hat"));
}

#[test]
fn every_sample_config_runs() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = TempDir::new().unwrap();
    for (cmd, file) in [
        ("simulate", "simulate.toml"),
        ("estimate", "simulate.toml"),
        ("pac", "pac.toml"),
        ("hypotheses", "hypotheses.toml"),
        ("margin-check", "margin.toml"),
    ] {
        let cfg = root.join(file);
        let out_dir = dir.path().join(cmd);
        let out = stoplab(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()], dir.path());
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join("manifest.json").exists(), "{cmd}");
    }
    let traj = fs::read_to_string(dir.path().join("simulate/trajectory.csv")).unwrap();
    assert!(traj.starts_with("tau_n,y_n,payoff_n,phase"));
}

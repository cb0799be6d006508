use std::path::Path;
use std::process::{Command, Output};

use csa_cli::config::ExperimentConfig;

fn csa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csa")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = "seed = 42\nn_trials = 3000\n[grid]\nrho_db = [0, 10, 20]\n";

#[test]
fn miss_sweep_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let out = csa(&["miss-sweep", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rho_db,scheme,node,p_miss,stderr"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3 * 3 * 2);
    assert!(rows[0].starts_with("0,nc,t,") || rows[0].starts_with("0,nc,t"), "{}", rows[0]);
    assert!(text.ends_with('\n'));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().filter(|l| l.starts_with("miss-sweep")).count(), 9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write(dir.path(), "k.toml", "seed = 1\nn_trials = 10\nbogus = 3\n");
    let out = csa(&["miss-sweep", "--config", &bad_key]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let ok = write(dir.path(), "ok.toml", SMALL);
    let out = csa(&["miss-sweep", "--config", &ok, "--set", "protocol.alpha=2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let out = csa(&["capacity-outage", "--config", &ok, "--set", "n_trials=100"]);
    assert_eq!(out.status.code(), Some(3), "outage needs n >= 100/eps");

    let out = csa(&["miss-sweep", "--config", &dir.path().join("missing.toml").display().to_string()]);
    assert_eq!(out.status.code(), Some(4));

    let out = csa(&["miss-sweep", "--config", &ok, "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(4));

    assert_eq!(csa(&["miss-sweep"]).status.code(), Some(2));
    assert_eq!(csa(&["no-such-kind"]).status.code(), Some(2));
    assert_eq!(csa(&["capacity-ergodic", "--config", &ok, "--set", "schemes=[\"mu-csa\"]"]).status.code(), Some(2));
}

#[test]
fn selfcheck_passes_without_config() {
    let out = csa(&["selfcheck"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().skip(1).all(|l| l.contains(",0,true,")), "{text}");
}

#[test]
fn output_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    for kind in ["miss-sweep", "capacity-ergodic", "imperfect"] {
        let mut files = Vec::new();
        for (i, threads) in ["1", "3", "1"].iter().enumerate() {
            let out = dir.path().join(format!("{kind}-{i}.json"));
            let o = csa(&[kind, "--config", &cfg, "--threads", threads, "--format", "json", "--out", &out.display().to_string(), "--set", "n_trials=9000"]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            files.push(std::fs::read(out).unwrap());
        }
        assert_eq!(files[0], files[1], "{kind}: thread count changed the output");
        assert_eq!(files[0], files[2], "{kind}: rerun changed the output");
    }
}

#[test]
fn json_meta_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let first = dir.path().join("first.json");
    let o = csa(&["joint-sweep", "--config", &cfg, "--set", "links.tr=0.5", "--format", "json", "--out", &first.display().to_string()]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&first).unwrap()).unwrap();
    assert_eq!(doc["meta"]["seed"], 42);
    let plan: ExperimentConfig = serde_json::from_value(doc["meta"]["config"].clone()).unwrap();
    let replay_cfg = write(dir.path(), "replay.json", &serde_json::to_string(&plan).unwrap());
    let second = dir.path().join("second.json");
    let o = csa(&["joint-sweep", "--config", &replay_cfg, "--format", "json", "--out", &second.display().to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again: serde_json::Value = serde_json::from_slice(&std::fs::read(&second).unwrap()).unwrap();
    assert_eq!(doc["rows"], again["rows"]);
    assert_eq!(doc["meta"]["config"], again["meta"]["config"]);
}

#[test]
fn every_kind_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\nn_trials = 2000\n[grid]\nrho_db = [20, 25, 30]\n[capacity]\nepsilons = [0.05]\n[multiuser]\npair_counts = [1, 2]\n[throughput]\nw1 = [0.1]\nw2 = [0.1]\n");
    for kind in ["miss-sweep", "joint-sweep", "diversity", "capacity-ergodic", "capacity-outage", "imperfect", "throughput", "multiuser", "selfcheck"] {
        let o = csa(&[kind, "--config", &cfg]);
        assert!(o.status.success(), "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stdout.is_empty(), "{kind}");
    }
}

#[test]
fn clamped_lower_bound_is_nonnegative() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\nn_trials = 2000\n[grid]\nrho_db = [-20]\n");
    let raw = String::from_utf8(csa(&["capacity-ergodic", "--config", &cfg]).stdout).unwrap();
    assert!(raw.lines().skip(1).any(|l| l.split(',').nth(2).unwrap().starts_with('-')));
    let clamped = String::from_utf8(csa(&["capacity-ergodic", "--config", &cfg, "--set", "capacity.clamp_lower=true"]).stdout).unwrap();
    assert!(clamped.lines().skip(1).all(|l| !l.split(',').nth(2).unwrap().starts_with('-')));
}

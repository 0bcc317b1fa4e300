use std::fs;
use std::path::Path;

use polaron_cli::{main_with_args, run_study, StudyConfig, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["polaron"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn empty_grid_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[grid]\ncutoff_2pi = []\n");
    let out = dir.path().join("out");
    assert_eq!(run(&["lhy", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_USAGE);
    assert!(!out.exists());
}

#[test]
fn subcommand_must_match_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "study = \"lhy\"\n[grid]\ncutoff_2pi = [1.0]\n");
    assert_eq!(run(&["expand", "--config", &cfg]), EXIT_USAGE);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["bogus"]), EXIT_USAGE);
}

#[test]
fn flow_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "flow.toml",
        "[model]\na_w = 0.3\n[grid]\nlambda_2pi = [2.0, 3.0]\nkappa_2pi = [1.0]\nn_max = [2]\n",
    );
    let out = dir.path().join("out");
    assert_eq!(run(&["flow", "--config", &cfg, "--out", out.to_str().unwrap()]), EXIT_OK);
    let csv = fs::read_to_string(out.join("renorm_flow.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "lambda,kappa,n_max,e0,e1,e2,E1,E2,e0_minus_E_total");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let vals: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(vals.len(), 9);
        assert!(vals[3] <= vals[4] && vals[4] <= vals[5]);
        assert!((vals[3] - vals[6] - vals[7] - vals[8]).abs() < 1e-9 * vals[3].abs());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("renorm_flow.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["study"], "renorm_flow");
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["outputs"][0]["rows"], 2);
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn manifest_reruns_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "lhy.toml", "[grid]\ncutoff_2pi = [2.0, 4.0]\n[model]\na_v = 0.7\n");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert_eq!(run(&["lhy", "--config", &cfg, "--out", first.to_str().unwrap()]), EXIT_OK);
    let manifest = first.join("lhy.manifest.json");
    assert_eq!(
        run(&["lhy", "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap(), "--workers", "2"]),
        EXIT_OK
    );
    assert_eq!(fs::read(first.join("lhy.csv")).unwrap(), fs::read(second.join("lhy.csv")).unwrap());
}

#[test]
fn failed_points_are_recorded_not_fatal() {
    let cfg = StudyConfig::parse("study = \"scattering_rate\"\n[grid]\nn = [0.5, 2.0]\n", false).unwrap();
    let run = run_study(&cfg).unwrap();
    assert_eq!(run.points[0].status, "failed");
    assert_eq!(run.points[1].status, "ok");
    assert_eq!(run.exit_code(), EXIT_USAGE);
    assert_eq!(run.csv().lines().count(), 2);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = StudyConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert_eq!(n, 7);
}

use std::fs;
use std::path::Path;
use std::process::Command;

use nsctl::commands::{control, offline, report, simulate};
use nsctl::config::{OfflineConfig, Test2Bc};
use nsctl::{Category, ExperimentConfig};

fn small(test: u8, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        n: 13,
        t_final: 0.5,
        offline: OfflineConfig { controls: vec![0.0, 1.0], substeps: 2, levels: 3 },
        t_stationary: 2.0,
        out: out.to_path_buf(),
        ..ExperimentConfig::preset(test).unwrap()
    }
}

#[test]
fn simulate_writes_one_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { sweep: vec![8, 12, 16], t_final: 0.5, timing_repeats: 1, ..small(1, dir.path()) };
    let rows = simulate(&cfg).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![8, 12, 16]);
    assert!(rows.iter().all(|r| r.max_err_u.is_finite() && r.full_per_step > 0.0));
    let timing = fs::read_to_string(dir.path().join("simulate/timing.csv")).unwrap();
    assert!(timing.starts_with("n,model,steps,per_step_seconds"));
    assert!(timing.lines().any(|l| l.contains(",vector-oracle,")));
    assert!(dir.path().join("simulate/diff_u_n12.bin").exists());
}

#[test]
fn offline_manifest_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    offline(&small(3, a.path())).unwrap();
    offline(&small(3, b.path())).unwrap();
    let ma = fs::read(a.path().join("offline/manifest.json")).unwrap();
    let mb = fs::read(b.path().join("offline/manifest.json")).unwrap();
    assert_eq!(ma, mb);
    assert_eq!(fs::read(a.path().join("offline/u_l.bin")).unwrap(), fs::read(b.path().join("offline/u_l.bin")).unwrap());
}

#[test]
fn control_requires_offline_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let e = control(&small(4, dir.path())).unwrap_err();
    assert_eq!(e.category, Category::MissingArtifacts);
}

#[test]
fn control_rejects_basis_of_another_resolution() {
    let dir = tempfile::tempdir().unwrap();
    offline(&small(4, dir.path())).unwrap();
    let e = control(&ExperimentConfig { n: 15, ..small(4, dir.path()) }).unwrap_err();
    assert_eq!(e.category, Category::Config);
}

#[test]
fn control_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(4, dir.path());
    offline(&cfg).unwrap();
    let s2 = control(&ExperimentConfig { controls: vec![0.0, 1.0], ..cfg.clone() }).unwrap();
    let s3 = control(&ExperimentConfig { controls: vec![0.0, 0.5, 1.0], ..cfg.clone() }).unwrap();
    for s in [&s2, &s3] {
        assert_eq!(s.signal.len(), 5);
        assert!(s.ratio_p >= 1.0);
        assert!(s.j_controlled.is_finite() && s.j_uncontrolled.is_finite());
        assert!(s.signal.iter().all(|a| s.controls.contains(a)));
    }
    let first = report(&cfg).unwrap();
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(report(&cfg).unwrap(), first);
    assert_eq!(fs::read_to_string(dir.path().join("report.csv")).unwrap(), csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "M,J,nodes,Ratio_p");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,") && lines[2].starts_with("3,"));
    for f in ["signal.csv", "tree.csv", "cost_controlled.csv", "cost_uncontrolled.csv", "final_p.bin", "summary.json"] {
        assert!(dir.path().join("control_M3").join(f).exists(), "{f}");
    }
}

#[test]
fn test2_with_homogeneous_walls_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { test2_bc: Test2Bc::Homogeneous, ..small(2, dir.path()) };
    offline(&cfg).unwrap();
    let s = control(&cfg).unwrap();
    assert!(s.j_controlled.is_finite());
    assert!(s.j_controlled <= s.j_uncontrolled);
}

#[test]
fn report_without_artifacts_is_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let e = report(&small(3, dir.path())).unwrap_err();
    assert_eq!(e.category, Category::MissingArtifacts);
}

#[test]
fn binary_reports_bad_config_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"test": 3, "grid": 10}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nsctl")).args(["config", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[config]"), "{err}");

    let out = Command::new(env!("CARGO_BIN_EXE_nsctl")).args(["control", "--test", "4", "--n", "9", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[missing-artifacts]"));

    let out = Command::new(env!("CARGO_BIN_EXE_nsctl")).args(["config", "--test", "2"]).output().unwrap();
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ExperimentConfig::preset(2).unwrap());
}

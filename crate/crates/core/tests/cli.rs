use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cohort::harness::io::read_trajectory;
use cohort::metrics::MetricsReport;
use cohort::RunRecord;

fn cohort(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohort"))
        .args(args)
        .current_dir(dir)
        .env("COHORT_WORKERS", "2")
        .output()
        .unwrap()
}

const SMALL: [&str; 6] = ["--set", "N=6", "--set", "T=30", "--set", "R_init=50"];

#[test]
fn run_then_recompute_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--out", "r"];
    args.extend(SMALL);
    let out = cohort(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let printed: MetricsReport = serde_json::from_slice(&out.stdout).unwrap();

    let record: RunRecord =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r/record.json")).unwrap()).unwrap();
    assert_eq!(record.params.n_agents, 6);
    assert_eq!(record.trajectory_path.as_deref(), Some("trajectory.csv"));
    assert_eq!(record.metrics.values(), printed.values());

    let traj = read_trajectory(&dir.path().join("r/trajectory.csv")).unwrap();
    assert_eq!(traj.len(), 30);

    let mut args = vec!["metrics", "r/trajectory.csv"];
    args.extend(SMALL);
    let out = cohort(&args, dir.path());
    assert!(out.status.success());
    let again: MetricsReport = serde_json::from_slice(&out.stdout).unwrap();
    for (a, b) in again.values().iter().zip(record.metrics.values()) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), "# small\nN = 4\nT = 10\npsi = pi\n").unwrap();
    let out = cohort(
        &["run", "-c", "c.cfg", "--set", "T=12", "--no-trajectory", "-o", "o"],
        dir.path(),
    );
    assert!(out.status.success());
    let record: RunRecord =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/record.json")).unwrap()).unwrap();
    assert_eq!(record.params.n_agents, 4);
    assert_eq!(record.params.steps, 12);
    assert!((record.params.psi - std::f64::consts::PI).abs() < 1e-15);
    assert!(!dir.path().join("o/trajectory.csv").exists());
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();
    let out = cohort(&["run", "--set", "omega_max=-1"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega_max"));

    let out = cohort(&["run", "--set", "no_such_key=1"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    let out = cohort(&["metrics", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(4));

    fs::write(
        dir.path().join("bad.csv"),
        "step,agent_id,x,y,theta,v,omega\n0,0,1,2,3\n",
    )
    .unwrap();
    let out = cohort(&["metrics", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let out = cohort(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_dry_run_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = cohort(&["sweep", "--dry-run"], dir.path());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3200");
    let out = cohort(&["sweep", "--dry-run", "--filter", "psi=pi/2,memory=false"], dir.path());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "400");
}

#[test]
fn snapshot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["snapshot", "--step", "5", "--focus", "0", "-o", "s.svg"];
    args.extend(SMALL);
    let out = cohort(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(dir.path().join("s.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("class=\"agent\"").count(), 6);
}

//! Full-factorial parameter sweeps with resume by content hash.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::config::{parse_bool, parse_real, SimParams};
use crate::harness::io::{write_json, write_trajectory};
use crate::harness::sim::{run_simulation, RunRecord};
use crate::metrics::MetricsReport;

pub const RECORD_FILE: &str = "record.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const FAILURES_FILE: &str = "failures.json";

/// Values per varied parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub psi: Vec<f64>,
    pub omega_max: Vec<f64>,
    pub sigma_phi: Vec<f64>,
    pub sigma_gamma: Vec<f64>,
    pub q: Vec<f64>,
    pub memory: Vec<bool>,
}

impl Default for GridSpec {
    fn default() -> Self {
        let noise = vec![0.001, 0.01, 1.0, 10.0, 100.0];
        Self {
            psi: vec![PI / 2.0, PI, 1.5 * PI, 2.0 * PI],
            omega_max: vec![0.1, 0.3, 0.6, 0.9],
            sigma_phi: noise.clone(),
            sigma_gamma: noise,
            q: vec![0.01, 0.1, 1.0, 10.0],
            memory: vec![true, false],
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-12)
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.psi.len()
            * self.omega_max.len()
            * self.sigma_phi.len()
            * self.sigma_gamma.len()
            * self.q.len()
            * self.memory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Restricts axes by a comma-separated `key=value` list such as
    /// `psi=pi/2, memory=false`. Values are matched against the grid with a
    /// relative tolerance of 1e-6.
    pub fn filter(&self, spec: &str) -> Result<Self> {
        let mut out = self.clone();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid("filter", format!("expected key=value, got `{part}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "memory" {
                let b =
                    parse_bool(value).ok_or_else(|| Error::invalid("memory", format!("not a boolean: `{value}`")))?;
                out.memory.retain(|m| *m == b);
                continue;
            }
            let x = parse_real(value).ok_or_else(|| Error::invalid(key, format!("not a number: `{value}`")))?;
            let axis = match key {
                "psi" => &mut out.psi,
                "omega_max" => &mut out.omega_max,
                "sigma_phi" => &mut out.sigma_phi,
                "sigma_gamma" => &mut out.sigma_gamma,
                "Q" | "q" => &mut out.q,
                _ => return Err(Error::invalid(key, "not a sweep axis")),
            };
            axis.retain(|v| close(*v, x));
        }
        Ok(out)
    }

    /// Every combination, applied on top of `base`.
    pub fn points(&self, base: &SimParams) -> Vec<SimParams> {
        let mut out = Vec::with_capacity(self.len());
        for &memory in &self.memory {
            for &psi in &self.psi {
                for &omega_max in &self.omega_max {
                    for &sigma_phi in &self.sigma_phi {
                        for &sigma_gamma in &self.sigma_gamma {
                            for &q in &self.q {
                                out.push(SimParams {
                                    psi,
                                    omega_max,
                                    sigma_phi,
                                    sigma_gamma,
                                    q,
                                    memory,
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Content hash of a full configuration (hex SHA-256 of its canonical text).
pub fn config_hash(params: &SimParams) -> String {
    let digest = Sha256::digest(params.to_config_text().as_bytes());
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub hash: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub total: usize,
    /// Already complete on disk before this invocation.
    pub skipped: usize,
    pub completed: usize,
    pub failures: Vec<SweepFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub out_dir: PathBuf,
    pub write_trajectories: bool,
}

fn run_dir(out: &Path, hash: &str) -> PathBuf {
    out.join(hash)
}

fn is_complete(out: &Path, hash: &str) -> bool {
    run_dir(out, hash).join(RECORD_FILE).is_file()
}

fn run_one(params: &SimParams, hash: &str, opts: &SweepOptions) -> Result<()> {
    let dir = run_dir(&opts.out_dir, hash);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let (mut record, traj) = run_simulation(params, None)?;
    if opts.write_trajectories {
        write_trajectory(&traj, &dir.join(TRAJECTORY_FILE))?;
        record.trajectory_path = Some(TRAJECTORY_FILE.into());
    }
    // the record is the completion marker, so it is renamed into place last
    let tmp = dir.join(format!("{RECORD_FILE}.tmp"));
    write_json(&record, &tmp)?;
    let dest = dir.join(RECORD_FILE);
    fs::rename(&tmp, &dest).map_err(|e| Error::io(&dest, e))
}

/// Runs every configuration not yet on disk. Failures are collected and do
/// not stop the sweep; they are retried on the next invocation.
pub fn run_sweep(points: &[SimParams], opts: &SweepOptions) -> Result<SweepSummary> {
    fs::create_dir_all(&opts.out_dir).map_err(|e| Error::io(&opts.out_dir, e))?;
    let hashes: Vec<String> = points.iter().map(config_hash).collect();
    let pending: Vec<usize> = (0..points.len())
        .filter(|&i| !is_complete(&opts.out_dir, &hashes[i]))
        .collect();
    let results: Vec<(usize, Result<()>)> = pending
        .par_iter()
        .map(|&i| (i, run_one(&points[i], &hashes[i], opts)))
        .collect();
    let mut summary = SweepSummary {
        total: points.len(),
        skipped: points.len() - pending.len(),
        ..SweepSummary::default()
    };
    for (i, r) in results {
        match r {
            Ok(()) => summary.completed += 1,
            Err(e) => summary.failures.push(SweepFailure {
                hash: hashes[i].clone(),
                message: e.to_string(),
            }),
        }
    }
    write_json(&summary.failures, &opts.out_dir.join(FAILURES_FILE))?;
    write_summary(points, &hashes, &opts.out_dir)?;
    Ok(summary)
}

/// One CSV row per completed configuration with the varied parameters and
/// the six headline metrics.
fn write_summary(points: &[SimParams], hashes: &[String], out: &Path) -> Result<()> {
    let mut text = String::from("hash,psi,omega_max,sigma_phi,sigma_gamma,Q,memory");
    for name in MetricsReport::NAMES {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    for (p, h) in points.iter().zip(hashes) {
        let path = run_dir(out, h).join(RECORD_FILE);
        let Ok(raw) = fs::read_to_string(&path) else { continue };
        let record: RunRecord = serde_json::from_str(&raw)?;
        let _ = write!(
            text,
            "{h},{},{},{},{},{},{}",
            p.psi, p.omega_max, p.sigma_phi, p.sigma_gamma, p.q, p.memory
        );
        for v in record.metrics.values() {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    let path = out.join(SUMMARY_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_size() {
        let g = GridSpec::default();
        assert_eq!(g.len(), 3200);
        assert_eq!(g.points(&SimParams::default()).len(), 3200);
    }

    #[test]
    fn filtered_grid() {
        let g = GridSpec::default().filter("psi=pi/2, memory=false").unwrap();
        assert_eq!(g.len(), 400);
        assert_eq!(GridSpec::default().filter("psi=1.5707963").unwrap().len(), 800);
        assert!(GridSpec::default().filter("speed=3").is_err());
        assert!(GridSpec::default().filter("psi").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = SimParams::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.q = 1.0;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn distinct_points_have_distinct_hashes() {
        let pts = GridSpec::default().points(&SimParams::default());
        let mut hashes: Vec<String> = pts.iter().map(config_hash).collect();
        hashes.sort();
        hashes.dedup();
        assert_eq!(hashes.len(), 3200);
    }
}

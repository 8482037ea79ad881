//! Variance-based global sensitivity analysis.
//!
//! Saltelli design over a scrambled Sobol sequence, Jansen first- and
//! total-order estimators, and row-bootstrap confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::SimParams;
use crate::harness::sim::run_simulation;
use crate::metrics::MetricsReport;

/// Output variance below which indices are reported as degenerate.
pub const EPS_VAR: f64 = 1e-12;
/// Largest supported base sample count.
pub const MAX_N_BASE: usize = 1 << 16;
/// Largest tolerated fraction of failed evaluations.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
}

impl Distribution {
    /// Maps `u` in `[0, 1)` through the inverse CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => (lo + u * (hi - lo)).clamp(lo, hi),
            Self::LogUniform { lo, hi } => (lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(lo, hi),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { lo, hi } | Self::LogUniform { lo, hi } => (lo, hi),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(name, "range needs finite lo < hi"));
        }
        if matches!(self, Self::LogUniform { .. }) && lo <= 0.0 {
            return Err(Error::invalid(name, "log-uniform range needs lo > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDist {
    /// Config key the sampled value is written to.
    pub name: String,
    pub dist: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub params: Vec<ParamDist>,
}

impl ParamSpace {
    pub fn new(params: Vec<ParamDist>) -> Result<Self> {
        let space = Self { params };
        space.validate()?;
        Ok(space)
    }

    /// The five varied model parameters with continuous ranges spanning the
    /// sweep grid.
    pub fn standard() -> Self {
        use std::f64::consts::PI;
        let p = |name: &str, dist| ParamDist {
            name: name.into(),
            dist,
        };
        Self {
            params: vec![
                p(
                    "psi",
                    Distribution::Uniform {
                        lo: PI / 2.0,
                        hi: 2.0 * PI,
                    },
                ),
                p("omega_max", Distribution::Uniform { lo: 0.1, hi: 0.9 }),
                p("sigma_phi", Distribution::LogUniform { lo: 1e-3, hi: 1e2 }),
                p("sigma_gamma", Distribution::LogUniform { lo: 1e-3, hi: 1e2 }),
                p("Q", Distribution::LogUniform { lo: 1e-2, hi: 10.0 }),
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::invalid("space", "no parameters"));
        }
        if 2 * self.params.len() > sobol_burley::NUM_DIMENSIONS as usize {
            return Err(Error::invalid("space", "too many parameters"));
        }
        for (i, p) in self.params.iter().enumerate() {
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::invalid(&p.name, "duplicate parameter"));
            }
            p.dist.validate(&p.name)?;
        }
        Ok(())
    }

    /// Sequence dimension for each parameter, fixed by name so that reordering
    /// the space reorders columns without changing their values.
    fn dimensions(&self) -> Vec<u32> {
        let mut sorted: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        sorted.sort_unstable();
        self.params
            .iter()
            .map(|p| sorted.iter().position(|s| *s == p.name).unwrap_or(0) as u32)
            .collect()
    }
}

/// The `A`, `B` and `AB_i` matrices of a Saltelli design, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaltelliSample {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    /// `ab[i]` is `A` with column `i` taken from `B`.
    pub ab: Vec<Vec<Vec<f64>>>,
}

impl SaltelliSample {
    pub fn n_base(&self) -> usize {
        self.a.len()
    }

    pub fn dim(&self) -> usize {
        self.ab.len()
    }

    /// All evaluation points: `A`, then `B`, then each `AB_i`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.n_base() * (self.dim() + 2));
        out.extend(self.a.iter().cloned());
        out.extend(self.b.iter().cloned());
        for m in &self.ab {
            out.extend(m.iter().cloned());
        }
        out
    }
}

fn seed32(seed: u64) -> u32 {
    (seed ^ (seed >> 32)) as u32
}

pub fn saltelli_sample(space: &ParamSpace, n_base: usize, seed: u64) -> Result<SaltelliSample> {
    space.validate()?;
    if !(2..=MAX_N_BASE).contains(&n_base) {
        return Err(Error::invalid("n_base", &format!("must lie in [2, {MAX_N_BASE}]")));
    }
    let k = space.dim();
    let dims = space.dimensions();
    let s = seed32(seed);
    let draw = |row: usize, offset: u32| -> Vec<f64> {
        space
            .params
            .iter()
            .zip(&dims)
            .map(|(p, &d)| {
                p.dist
                    .quantile(f64::from(sobol_burley::sample(row as u32, d + offset, s)))
            })
            .collect()
    };
    let a: Vec<Vec<f64>> = (0..n_base).map(|r| draw(r, 0)).collect();
    let b: Vec<Vec<f64>> = (0..n_base).map(|r| draw(r, k as u32)).collect();
    let ab = (0..k)
        .map(|i| {
            a.iter()
                .zip(&b)
                .map(|(ra, rb)| {
                    let mut row = ra.clone();
                    row[i] = rb[i];
                    row
                })
                .collect()
        })
        .collect();
    Ok(SaltelliSample { a, b, ab })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolIndices {
    pub s1: Vec<f64>,
    pub st: Vec<f64>,
    pub variance: f64,
    pub degenerate: bool,
}

fn pooled_variance(y_a: &[f64], y_b: &[f64]) -> f64 {
    let n = (y_a.len() + y_b.len()) as f64;
    let mean = y_a.iter().chain(y_b).sum::<f64>() / n;
    y_a.iter().chain(y_b).map(|y| (y - mean).powi(2)).sum::<f64>() / n
}

/// Jansen estimators from model outputs on `A`, `B` and each `AB_i`.
pub fn sobol_indices(y_a: &[f64], y_b: &[f64], y_ab: &[Vec<f64>]) -> Result<SobolIndices> {
    let n = y_a.len();
    if y_b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y_b.len(),
        });
    }
    if let Some(bad) = y_ab.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let k = y_ab.len();
    let var = pooled_variance(y_a, y_b);
    if n == 0 || !(var >= EPS_VAR) {
        return Ok(SobolIndices {
            s1: vec![0.0; k],
            st: vec![0.0; k],
            variance: if var.is_finite() { var } else { 0.0 },
            degenerate: true,
        });
    }
    let half_mean_sq =
        |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / (2.0 * n as f64);
    let s1 = y_ab.iter().map(|c| (var - half_mean_sq(y_b, c)) / var).collect();
    let st = y_ab.iter().map(|c| half_mean_sq(y_a, c) / var).collect();
    Ok(SobolIndices {
        s1,
        st,
        variance: var,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub s1: Vec<[f64; 2]>,
    pub st: Vec<[f64; 2]>,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile intervals from resampling rows with replacement. Each interval
/// is widened where needed so it contains the point estimate.
pub fn bootstrap_ci(
    y_a: &[f64],
    y_b: &[f64],
    y_ab: &[Vec<f64>],
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapCi> {
    let point = sobol_indices(y_a, y_b, y_ab)?;
    let n = y_a.len();
    let k = y_ab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s1_draws = vec![Vec::with_capacity(replicates); k];
    let mut st_draws = vec![Vec::with_capacity(replicates); k];
    for _ in 0..replicates {
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let pick = |y: &[f64]| rows.iter().map(|&r| y[r]).collect::<Vec<f64>>();
        let ab: Vec<Vec<f64>> = y_ab.iter().map(|c| pick(c)).collect();
        let est = sobol_indices(&pick(y_a), &pick(y_b), &ab)?;
        for i in 0..k {
            s1_draws[i].push(est.s1[i]);
            st_draws[i].push(est.st[i]);
        }
    }
    let alpha = 0.5 * (1.0 - level);
    let interval = |draws: &mut Vec<f64>, est: f64| -> [f64; 2] {
        draws.sort_by(f64::total_cmp);
        let lo = percentile(draws, alpha);
        let hi = percentile(draws, 1.0 - alpha);
        if lo.is_nan() {
            return [est, est];
        }
        [lo.min(est), hi.max(est)]
    };
    Ok(BootstrapCi {
        s1: (0..k).map(|i| interval(&mut s1_draws[i], point.s1[i])).collect(),
        st: (0..k).map(|i| interval(&mut st_draws[i], point.st[i])).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Fixed settings; varied parameters are overwritten per point.
    pub base: SimParams,
    pub space: ParamSpace,
    pub n_base: usize,
    pub memory: bool,
    pub seed: u64,
    pub bootstrap: usize,
    pub ci_level: f64,
}

impl StudyConfig {
    pub fn new(base: SimParams, n_base: usize, memory: bool, seed: u64) -> Self {
        Self {
            base,
            space: ParamSpace::standard(),
            n_base,
            memory,
            seed,
            bootstrap: 200,
            ci_level: 0.95,
        }
    }

    /// Simulation seed shared by every sample point.
    pub fn simulation_seed(&self) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17) ^ 0x0C0F_FEE0
    }

    /// Simulation parameters for one sample point.
    pub fn params_at(&self, x: &[f64]) -> Result<SimParams> {
        let mut p = self.base.clone();
        p.memory = self.memory;
        p.seed = self.simulation_seed();
        for (dist, v) in self.space.params.iter().zip(x) {
            p.set(&dist.name, &v.to_string())?;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub parameter: String,
    pub metric: String,
    #[serde(rename = "S1")]
    pub s1: f64,
    #[serde(rename = "ST")]
    pub st: f64,
    #[serde(rename = "S1_ci")]
    pub s1_ci: [f64; 2],
    #[serde(rename = "ST_ci")]
    pub st_ci: [f64; 2],
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolReport {
    pub n_base: usize,
    pub memory: bool,
    pub seed: u64,
    pub parameters: Vec<String>,
    pub metrics: Vec<String>,
    pub evaluations: usize,
    pub failures: usize,
    /// Base rows dropped because one of their evaluations failed.
    pub excluded_rows: usize,
    pub indices: Vec<IndexEntry>,
}

impl SobolReport {
    pub fn entry(&self, parameter: &str, metric: &str) -> Option<&IndexEntry> {
        self.indices
            .iter()
            .find(|e| e.parameter == parameter && e.metric == metric)
    }

    /// Parameters sorted by decreasing first-order index for one metric.
    pub fn rank_by_s1(&self, metric: &str) -> Vec<String> {
        let mut rows: Vec<&IndexEntry> = self.indices.iter().filter(|e| e.metric == metric).collect();
        rows.sort_by(|a, b| b.s1.total_cmp(&a.s1));
        rows.into_iter().map(|e| e.parameter.clone()).collect()
    }
}

/// Runs the study with an arbitrary point evaluator returning one value per
/// metric name.
pub fn run_study_with<F>(config: &StudyConfig, metric_names: &[&str], eval: F) -> Result<SobolReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let design = saltelli_sample(&config.space, config.n_base, config.seed)?;
    let points = design.points();
    let outputs: Vec<Option<Vec<f64>>> = points
        .par_iter()
        .map(|x| {
            eval(x)
                .ok()
                .filter(|y| y.len() == metric_names.len() && y.iter().all(|v| v.is_finite()))
        })
        .collect();
    let failures = outputs.iter().filter(|o| o.is_none()).count();
    if failures as f64 > MAX_FAILURE_FRACTION * points.len() as f64 {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: points.len(),
        });
    }
    let n = design.n_base();
    let k = design.dim();
    // a row is usable only if all of its k + 2 evaluations succeeded
    let block = |b: usize, r: usize| outputs[b * n + r].as_ref();
    let rows: Vec<usize> = (0..n).filter(|&r| (0..k + 2).all(|b| block(b, r).is_some())).collect();
    let mut indices = Vec::with_capacity(k * metric_names.len());
    for (m, name) in metric_names.iter().enumerate() {
        let column = |b: usize| {
            rows.iter()
                .map(|&r| block(b, r).map_or(f64::NAN, |y| y[m]))
                .collect::<Vec<f64>>()
        };
        let y_a = column(0);
        let y_b = column(1);
        let y_ab: Vec<Vec<f64>> = (0..k).map(|i| column(i + 2)).collect();
        let est = sobol_indices(&y_a, &y_b, &y_ab)?;
        let ci = bootstrap_ci(
            &y_a,
            &y_b,
            &y_ab,
            config.bootstrap,
            config.ci_level,
            config.seed ^ (m as u64 + 1),
        )?;
        for (i, p) in config.space.params.iter().enumerate() {
            indices.push(IndexEntry {
                parameter: p.name.clone(),
                metric: name.to_string(),
                s1: est.s1[i],
                st: est.st[i],
                s1_ci: ci.s1[i],
                st_ci: ci.st[i],
                degenerate: est.degenerate,
            });
        }
    }
    Ok(SobolReport {
        n_base: n,
        memory: config.memory,
        seed: config.seed,
        parameters: config.space.names(),
        metrics: metric_names.iter().map(|s| s.to_string()).collect(),
        evaluations: points.len(),
        failures,
        excluded_rows: n - rows.len(),
        indices,
    })
}

/// One simulation per sample point, scored on the six headline metrics.
pub fn run_sobol_study(config: &StudyConfig) -> Result<SobolReport> {
    run_study_with(config, &MetricsReport::NAMES, |x| {
        let params = config.params_at(x)?;
        let (record, _) = run_simulation(&params, None)?;
        Ok(record.metrics.values().to_vec())
    })
}

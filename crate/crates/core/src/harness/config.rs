//! Simulation parameters and the flat `key = value` config format.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are rejected.
//! Angles accept multiples of pi (`pi/2`, `3pi/2`, `2*pi`, `π`).

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::control::{AgentModel, ControlParams, SpeedMode};
use crate::error::{Error, Result};
use crate::estimation::EstimatorParams;
use crate::perception::FovParams;

/// How apparent-size noise scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeNoise {
    /// Standard deviation is `sigma_gamma * gamma`.
    Relative,
    /// Standard deviation is `sigma_gamma` radians.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n_agents: usize,
    pub dt: f64,
    pub steps: usize,
    pub d0: f64,
    pub r_body: f64,
    pub psi: f64,
    pub omega_max: f64,
    pub sigma_phi: f64,
    pub sigma_gamma: f64,
    pub q: f64,
    pub memory: bool,
    pub k_vis: f64,
    pub tau_vis: f64,
    pub eps_vis: f64,
    pub eta_v: f64,
    pub eta_omega: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub v_init: f64,
    pub speed_mode: SpeedMode,
    pub r_init: f64,
    pub eps_dbscan: f64,
    pub min_pts: usize,
    pub dbscan_every: usize,
    pub eval_window_fraction: f64,
    pub size_noise: SizeNoise,
    pub true_sigma_phi: Option<f64>,
    pub true_sigma_gamma: Option<f64>,
    pub q_ego: f64,
    pub lookahead_dt: Option<f64>,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_agents: 250,
            dt: 0.1,
            steps: 2000,
            d0: 50.0,
            r_body: 1.0,
            psi: 2.0 * PI,
            omega_max: 0.3,
            sigma_phi: 0.01,
            sigma_gamma: 0.01,
            q: 0.1,
            memory: true,
            k_vis: 10.0,
            tau_vis: 0.5,
            eps_vis: 1e-6,
            eta_v: 5.0,
            eta_omega: 5.0,
            v_min: 1.0,
            v_max: 5.0,
            v_init: 0.0,
            speed_mode: SpeedMode::Gradient,
            r_init: 150.0,
            eps_dbscan: 0.2,
            min_pts: 5,
            dbscan_every: 10,
            eval_window_fraction: 0.5,
            size_noise: SizeNoise::Relative,
            true_sigma_phi: None,
            true_sigma_gamma: None,
            q_ego: 0.0,
            lookahead_dt: Some(1.5),
            seed: 0,
        }
    }
}

/// Every recognised key, in canonical output order.
pub const CONFIG_KEYS: &[&str] = &[
    "N",
    "dt",
    "T",
    "d0",
    "r_body",
    "psi",
    "omega_max",
    "sigma_phi",
    "sigma_gamma",
    "Q",
    "memory",
    "k_vis",
    "tau_vis",
    "eps_vis",
    "eta_v",
    "eta_omega",
    "v_min",
    "v_max",
    "v_init",
    "speed_mode",
    "R_init",
    "eps_dbscan",
    "min_pts",
    "dbscan_every",
    "eval_window_fraction",
    "size_noise",
    "true_sigma_phi",
    "true_sigma_gamma",
    "Q_ego",
    "lookahead_dt",
    "seed",
];

impl SimParams {
    pub fn true_sigma_phi(&self) -> f64 {
        self.true_sigma_phi.unwrap_or(self.sigma_phi)
    }

    pub fn true_sigma_gamma(&self) -> f64 {
        self.true_sigma_gamma.unwrap_or(self.sigma_gamma)
    }

    pub fn lookahead_dt(&self) -> f64 {
        self.lookahead_dt.unwrap_or(self.dt)
    }

    pub fn fov(&self) -> FovParams {
        FovParams {
            psi: self.psi,
            k_vis: self.k_vis,
        }
    }

    pub fn estimator(&self) -> EstimatorParams {
        EstimatorParams {
            q: self.q,
            q_ego: self.q_ego,
            sigma_phi: self.sigma_phi,
            sigma_gamma: self.sigma_gamma,
            size_noise: self.size_noise,
            memory: self.memory,
            tau_vis: self.tau_vis,
            eps_vis: self.eps_vis,
            r_body: self.r_body,
            fov: self.fov(),
        }
    }

    pub fn control(&self) -> ControlParams {
        ControlParams {
            d0: self.d0,
            eta_v: self.eta_v,
            eta_omega: self.eta_omega,
            omega_max: self.omega_max,
            v_min: self.v_min,
            v_max: self.v_max,
            lookahead_dt: self.lookahead_dt(),
            speed_mode: self.speed_mode,
        }
    }

    pub fn model(&self) -> AgentModel {
        AgentModel {
            control: self.control(),
            estimator: self.estimator(),
        }
    }

    /// First step included in windowed metrics.
    pub fn eval_start(&self, n_steps: usize) -> usize {
        let window = ((n_steps as f64) * self.eval_window_fraction).ceil() as usize;
        n_steps - window.clamp(1, n_steps.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(key, reason))
            }
        }
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        check(self.n_agents >= 2, "N", "must be at least 2")?;
        check(finite_pos(self.dt), "dt", "must be positive")?;
        check(self.steps >= 1, "T", "must be at least 1")?;
        check(finite_pos(self.d0), "d0", "must be positive")?;
        check(finite_pos(self.r_body), "r_body", "must be positive")?;
        check(
            finite_pos(self.psi) && self.psi <= 2.0 * PI + 1e-9,
            "psi",
            "must lie in (0, 2pi]",
        )?;
        check(finite_pos(self.omega_max), "omega_max", "must be positive")?;
        check(finite_pos(self.sigma_phi), "sigma_phi", "must be positive")?;
        check(finite_pos(self.sigma_gamma), "sigma_gamma", "must be positive")?;
        check(finite_nonneg(self.q), "Q", "must be non-negative")?;
        check(finite_pos(self.k_vis), "k_vis", "must be positive")?;
        check(
            self.tau_vis > 0.0 && self.tau_vis < 1.0,
            "tau_vis",
            "must lie in (0, 1)",
        )?;
        check(
            self.eps_vis > 0.0 && self.eps_vis <= 1.0,
            "eps_vis",
            "must lie in (0, 1]",
        )?;
        check(finite_nonneg(self.eta_v), "eta_v", "must be non-negative")?;
        check(finite_nonneg(self.eta_omega), "eta_omega", "must be non-negative")?;
        check(finite_pos(self.v_max), "v_max", "must be positive")?;
        check(
            finite_nonneg(self.v_min) && self.v_min <= self.v_max,
            "v_min",
            "must lie in [0, v_max]",
        )?;
        check(
            finite_nonneg(self.v_init) && self.v_init <= self.v_max,
            "v_init",
            "must lie in [0, v_max]",
        )?;
        check(finite_nonneg(self.r_init), "R_init", "must be non-negative")?;
        check(finite_pos(self.eps_dbscan), "eps_dbscan", "must be positive")?;
        check(self.min_pts >= 1, "min_pts", "must be at least 1")?;
        check(self.dbscan_every >= 1, "dbscan_every", "must be at least 1")?;
        check(
            self.eval_window_fraction > 0.0 && self.eval_window_fraction <= 1.0,
            "eval_window_fraction",
            "must lie in (0, 1]",
        )?;
        if let Some(s) = self.true_sigma_phi {
            check(finite_nonneg(s), "true_sigma_phi", "must be non-negative")?;
        }
        if let Some(s) = self.true_sigma_gamma {
            check(finite_nonneg(s), "true_sigma_gamma", "must be non-negative")?;
        }
        check(finite_nonneg(self.q_ego), "Q_ego", "must be non-negative")?;
        if let Some(h) = self.lookahead_dt {
            check(finite_pos(h), "lookahead_dt", "must be positive")?;
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |reason: &str| Error::invalid(key, format!("{reason}: `{value}`"));
        let real = || parse_real(value).ok_or_else(|| bad("expected a number"));
        let count = || {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| bad("expected a non-negative integer"))
        };
        let optional = || -> Result<Option<f64>> {
            match value.trim() {
                "" | "none" | "default" => Ok(None),
                _ => real().map(Some),
            }
        };
        match key {
            "N" => self.n_agents = count()?,
            "dt" => self.dt = real()?,
            "T" => self.steps = count()?,
            "d0" => self.d0 = real()?,
            "r_body" => self.r_body = real()?,
            "psi" => self.psi = real()?,
            "omega_max" => self.omega_max = real()?,
            "sigma_phi" => self.sigma_phi = real()?,
            "sigma_gamma" => self.sigma_gamma = real()?,
            "Q" => self.q = real()?,
            "memory" => self.memory = parse_bool(value).ok_or_else(|| bad("expected a boolean"))?,
            "k_vis" => self.k_vis = real()?,
            "tau_vis" => self.tau_vis = real()?,
            "eps_vis" => self.eps_vis = real()?,
            "eta_v" => self.eta_v = real()?,
            "eta_omega" => self.eta_omega = real()?,
            "v_min" => self.v_min = real()?,
            "v_max" => self.v_max = real()?,
            "v_init" => self.v_init = real()?,
            "speed_mode" => {
                self.speed_mode = match value.trim() {
                    "gradient" => SpeedMode::Gradient,
                    "fixed" => SpeedMode::Fixed,
                    _ => return Err(bad("expected `gradient` or `fixed`")),
                }
            }
            "R_init" => self.r_init = real()?,
            "eps_dbscan" => self.eps_dbscan = real()?,
            "min_pts" => self.min_pts = count()?,
            "dbscan_every" => self.dbscan_every = count()?,
            "eval_window_fraction" => self.eval_window_fraction = real()?,
            "size_noise" => {
                self.size_noise = match value.trim() {
                    "relative" => SizeNoise::Relative,
                    "absolute" => SizeNoise::Absolute,
                    _ => return Err(bad("expected `relative` or `absolute`")),
                }
            }
            "true_sigma_phi" => self.true_sigma_phi = optional()?,
            "true_sigma_gamma" => self.true_sigma_gamma = optional()?,
            "Q_ego" => self.q_ego = real()?,
            "lookahead_dt" => self.lookahead_dt = optional()?,
            "seed" => self.seed = value.trim().parse().map_err(|_| bad("expected an unsigned integer"))?,
            _ => return Err(Error::invalid(key, "unknown key")),
        }
        Ok(())
    }

    /// Canonical config text; parses back to an equal value.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), fmt_real);
        for key in CONFIG_KEYS {
            let value = match *key {
                "N" => self.n_agents.to_string(),
                "dt" => fmt_real(self.dt),
                "T" => self.steps.to_string(),
                "d0" => fmt_real(self.d0),
                "r_body" => fmt_real(self.r_body),
                "psi" => fmt_real(self.psi),
                "omega_max" => fmt_real(self.omega_max),
                "sigma_phi" => fmt_real(self.sigma_phi),
                "sigma_gamma" => fmt_real(self.sigma_gamma),
                "Q" => fmt_real(self.q),
                "memory" => self.memory.to_string(),
                "k_vis" => fmt_real(self.k_vis),
                "tau_vis" => fmt_real(self.tau_vis),
                "eps_vis" => fmt_real(self.eps_vis),
                "eta_v" => fmt_real(self.eta_v),
                "eta_omega" => fmt_real(self.eta_omega),
                "v_min" => fmt_real(self.v_min),
                "v_max" => fmt_real(self.v_max),
                "v_init" => fmt_real(self.v_init),
                "speed_mode" => match self.speed_mode {
                    SpeedMode::Gradient => "gradient".into(),
                    SpeedMode::Fixed => "fixed".into(),
                },
                "R_init" => fmt_real(self.r_init),
                "eps_dbscan" => fmt_real(self.eps_dbscan),
                "min_pts" => self.min_pts.to_string(),
                "dbscan_every" => self.dbscan_every.to_string(),
                "eval_window_fraction" => fmt_real(self.eval_window_fraction),
                "size_noise" => match self.size_noise {
                    SizeNoise::Relative => "relative".into(),
                    SizeNoise::Absolute => "absolute".into(),
                },
                "true_sigma_phi" => opt(self.true_sigma_phi),
                "true_sigma_gamma" => opt(self.true_sigma_gamma),
                "Q_ego" => fmt_real(self.q_ego),
                "lookahead_dt" => opt(self.lookahead_dt),
                "seed" => self.seed.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

/// Parses config text on top of the defaults.
pub fn parse_config(text: &str) -> Result<SimParams> {
    let mut params = SimParams::default();
    apply_config(&mut params, text)?;
    Ok(params)
}

/// Applies config text on top of existing parameters, then validates.
pub fn apply_config(params: &mut SimParams, text: &str) -> Result<()> {
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigSyntax {
                line: idx + 1,
                message: format!("expected `key = value`, found `{line}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::ConfigSyntax {
                line: idx + 1,
                message: "missing key".into(),
            });
        }
        params.set(key, value.trim())?;
    }
    params.validate()
}

fn fmt_real(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x:?}")
}

pub fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// Parses a real number or a rational multiple of pi such as `3pi/2`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s: String = s
        .trim()
        .replace('π', "pi")
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().ok()?),
        None => (s.as_str(), 1.0),
    };
    let coef = num.strip_suffix("pi")?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    Some(coef * PI / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let p = parse_config("").unwrap();
        assert_eq!(p.n_agents, 250);
        assert_eq!(p.dt, 0.1);
        assert_eq!(p.d0, 50.0);
        assert_eq!(p, SimParams::default());
    }

    #[test]
    fn psi_decimal_and_symbolic() {
        let p = parse_config("psi = 1.5707963").unwrap();
        assert!((p.psi - PI / 2.0).abs() < 1e-7);
        for text in ["pi/2", "π/2", "0.5*pi", "1pi/2"] {
            let p = parse_config(&format!("psi = {text}")).unwrap();
            assert!((p.psi - PI / 2.0).abs() < 1e-15, "{text}");
        }
        assert_eq!(parse_real("3pi/2"), Some(1.5 * PI));
        assert_eq!(parse_real("2pi"), Some(2.0 * PI));
    }

    #[test]
    fn n_below_two_names_key() {
        match parse_config("N = 1") {
            Err(Error::InvalidParam { key, .. }) => assert_eq!(key, "N"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_syntax_errors() {
        assert!(matches!(
            parse_config("bogus = 3"),
            Err(Error::InvalidParam { key, .. }) if key == "bogus"
        ));
        assert!(matches!(
            parse_config("# comment\nN = 10\nnot a pair\n"),
            Err(Error::ConfigSyntax { line: 3, .. })
        ));
    }

    #[test]
    fn comments_and_whitespace() {
        let p = parse_config("  N = 30   # small\n\n# psi = 1\nmemory = false\nT=10").unwrap();
        assert_eq!(p.n_agents, 30);
        assert!(!p.memory);
        assert_eq!(p.steps, 10);
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut p = SimParams::default();
        p.psi = PI / 2.0;
        p.true_sigma_phi = Some(0.123456789);
        p.size_noise = SizeNoise::Absolute;
        p.seed = 42;
        let back = parse_config(&p.to_config_text()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn eval_start_takes_final_fraction() {
        let p = SimParams::default();
        assert_eq!(p.eval_start(2000), 1000);
        assert_eq!(p.eval_start(1), 0);
        assert_eq!(p.eval_start(3), 1);
    }
}

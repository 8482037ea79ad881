//! Behavioral metrics over a recorded trajectory.
//!
//! `D` uses the whole run; every other metric averages over the evaluation
//! window, and fragmentation is sampled every `dbscan_every` steps of it.

mod circle;
mod dbscan;
mod hull;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use circle::{min_enclosing_circle, Circle};
pub use dbscan::{circular_dbscan, circular_distance, cluster_count};
pub use hull::{convex_hull, polygon_area};

use crate::harness::config::SimParams;
use crate::linalg::Vec2;
use crate::world::{AgentAction, Pose};

/// Poses at the start of one step and the actions taken during it.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub poses: Vec<Pose>,
    pub actions: Vec<AgentAction>,
}

impl Frame {
    pub fn positions(&self) -> Vec<Vec2> {
        self.poses.iter().map(Pose::position).collect()
    }

    pub fn center_of_mass(&self) -> Vec2 {
        center_of_mass(&self.poses)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n_agents: usize,
    pub frames: Vec<Frame>,
    pub params: Option<SimParams>,
    pub seed: u64,
}

impl Trajectory {
    pub fn new(n_agents: usize) -> Self {
        Self {
            n_agents,
            frames: Vec::new(),
            params: None,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn push(&mut self, poses: Vec<Pose>, actions: Vec<AgentAction>) {
        debug_assert_eq!(poses.len(), self.n_agents);
        self.frames.push(Frame { poses, actions });
    }

    fn window_frames(&self, window: &Range<usize>) -> &[Frame] {
        let end = window.end.min(self.frames.len());
        let start = window.start.min(end);
        &self.frames[start..end]
    }
}

/// Knobs for metric evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub eval_window_fraction: f64,
    pub eps_dbscan: f64,
    pub min_pts: usize,
    pub dbscan_every: usize,
}

impl From<&SimParams> for MetricsConfig {
    fn from(p: &SimParams) -> Self {
        Self {
            eval_window_fraction: p.eval_window_fraction,
            eps_dbscan: p.eps_dbscan,
            min_pts: p.min_pts,
            dbscan_every: p.dbscan_every,
        }
    }
}

impl Default for MetricsConfig {
    fn default() -> Self {
        (&SimParams::default()).into()
    }
}

impl MetricsConfig {
    pub fn window(&self, n_steps: usize) -> Range<usize> {
        let len = ((n_steps as f64) * self.eval_window_fraction).ceil() as usize;
        n_steps - len.clamp(1.min(n_steps), n_steps)..n_steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Polarization.
    #[serde(rename = "P")]
    pub polarization: f64,
    /// Relative circular area.
    #[serde(rename = "RCA")]
    pub rca: f64,
    /// Maximum displacement of the center of mass.
    #[serde(rename = "D")]
    pub max_displacement: f64,
    /// Mean minimum agent distance to the center of mass.
    #[serde(rename = "C")]
    pub center_distance: f64,
    /// Mean number of heading clusters.
    #[serde(rename = "K")]
    pub clusters: f64,
    /// Mean clustered fraction.
    #[serde(rename = "F")]
    pub clustered_fraction: f64,
    /// Mean agent distance to the center of mass.
    pub mean_radius: f64,
    /// Mean minimum-enclosing-circle radius.
    pub mec_radius: f64,
    pub eval_window: [usize; 2],
}

impl MetricsReport {
    pub const NAMES: [&'static str; 6] = ["P", "RCA", "D", "C", "K", "F"];

    /// The six headline metrics in [`Self::NAMES`] order.
    pub fn values(&self) -> [f64; 6] {
        [
            self.polarization,
            self.rca,
            self.max_displacement,
            self.center_distance,
            self.clusters,
            self.clustered_fraction,
        ]
    }
}

pub fn center_of_mass(poses: &[Pose]) -> Vec2 {
    let n = poses.len().max(1) as f64;
    let (sx, sy) = poses.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Vec2::new(sx / n, sy / n)
}

fn mean_over<F: Fn(&Frame) -> f64>(frames: &[Frame], f: F) -> f64 {
    if frames.is_empty() {
        return 0.0;
    }
    frames.iter().map(f).sum::<f64>() / frames.len() as f64
}

pub fn heading_order(poses: &[Pose]) -> f64 {
    let n = poses.len().max(1) as f64;
    let (c, s) = poses
        .iter()
        .fold((0.0, 0.0), |(c, s), p| (c + p.theta.cos(), s + p.theta.sin()));
    ((c / n).hypot(s / n)).min(1.0)
}

pub fn polarization(traj: &Trajectory, window: Range<usize>) -> f64 {
    mean_over(traj.window_frames(&window), |f| heading_order(&f.poses))
}

/// Hull area over enclosing-circle area for one configuration.
pub fn relative_circular_area(points: &[Vec2]) -> f64 {
    let hull = convex_hull(points);
    let area = polygon_area(&hull);
    if hull.len() < 3 || area <= 0.0 {
        return 0.0;
    }
    match min_enclosing_circle(&hull) {
        Some(c) if c.radius > 0.0 => (area / (std::f64::consts::PI * c.radius * c.radius)).min(1.0),
        _ => 0.0,
    }
}

pub fn rca(traj: &Trajectory, window: Range<usize>) -> f64 {
    mean_over(traj.window_frames(&window), |f| relative_circular_area(&f.positions()))
}

pub fn max_mean_displacement(traj: &Trajectory) -> f64 {
    let Some(first) = traj.frames.first() else {
        return 0.0;
    };
    let origin = first.center_of_mass();
    traj.frames
        .iter()
        .map(|f| f.center_of_mass().distance(origin))
        .fold(0.0, f64::max)
}

pub fn center_distance(traj: &Trajectory, window: Range<usize>) -> f64 {
    mean_over(traj.window_frames(&window), |f| {
        let com = f.center_of_mass();
        f.poses
            .iter()
            .map(|p| p.position().distance(com))
            .fold(f64::INFINITY, f64::min)
    })
}

/// Time-averaged mean distance of agents to the center of mass.
pub fn mean_radius(traj: &Trajectory, window: Range<usize>) -> f64 {
    mean_over(traj.window_frames(&window), |f| {
        let com = f.center_of_mass();
        f.poses.iter().map(|p| p.position().distance(com)).sum::<f64>() / f.poses.len().max(1) as f64
    })
}

pub fn mec_radius(traj: &Trajectory, window: Range<usize>) -> f64 {
    mean_over(traj.window_frames(&window), |f| {
        min_enclosing_circle(&convex_hull(&f.positions())).map_or(0.0, |c| c.radius)
    })
}

/// Mean heading-cluster count `K` and clustered fraction `F`.
pub fn fragmentation(traj: &Trajectory, window: Range<usize>, eps: f64, min_pts: usize, every: usize) -> (f64, f64) {
    let frames = traj.window_frames(&window);
    let sampled: Vec<&Frame> = frames.iter().step_by(every.max(1)).collect();
    if sampled.is_empty() {
        return (0.0, 0.0);
    }
    let (mut k, mut f) = (0.0, 0.0);
    for frame in &sampled {
        let headings: Vec<f64> = frame.poses.iter().map(|p| p.theta).collect();
        let labels = circular_dbscan(&headings, eps, min_pts);
        k += cluster_count(&labels) as f64;
        f += labels.iter().filter(|l| l.is_some()).count() as f64 / labels.len().max(1) as f64;
    }
    let n = sampled.len() as f64;
    (k / n, f / n)
}

pub fn compute_metrics(traj: &Trajectory, cfg: &MetricsConfig) -> MetricsReport {
    let window = cfg.window(traj.len());
    let (clusters, clustered_fraction) =
        fragmentation(traj, window.clone(), cfg.eps_dbscan, cfg.min_pts, cfg.dbscan_every);
    MetricsReport {
        polarization: polarization(traj, window.clone()),
        rca: rca(traj, window.clone()),
        max_displacement: max_mean_displacement(traj),
        center_distance: center_distance(traj, window.clone()),
        clusters,
        clustered_fraction,
        mean_radius: mean_radius(traj, window.clone()),
        mec_radius: mec_radius(traj, window.clone()),
        eval_window: [window.start, window.end],
    }
}

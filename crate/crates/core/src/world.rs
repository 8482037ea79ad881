//! Ground-truth world: unicycle agents, true cue geometry and noisy observations.
//!
//! Random draws come from ChaCha8 streams keyed by `(seed, agent, step)` with a
//! fixed word offset per neighbor, so every observation is a pure function of
//! the world snapshot and never depends on evaluation order or thread count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{SimParams, SizeNoise};
use crate::linalg::Vec2;
use crate::scalar::{wrap_angle, Scalar};

/// Below this angular rate the unicycle is integrated with the straight-line limit.
pub const EPS_OMEGA: f64 = 1e-8;
/// Minimum separation treated as non-degenerate.
pub const EPS_D: f64 = 1e-3;
/// Observed apparent sizes are clamped into `[GAMMA_MIN, pi - GAMMA_MIN]`.
pub const GAMMA_MIN: f64 = 1e-6;

const WORDS_PER_NEIGHBOR: u128 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentAction {
    pub v: f64,
    pub omega: f64,
}

impl AgentAction {
    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn clamped(self, v_max: f64, omega_max: f64) -> Self {
        Self {
            v: self.v.clamp(0.0, v_max),
            omega: self.omega.clamp(-omega_max, omega_max),
        }
    }

    pub fn with_min_speed(self, v_min: f64) -> Self {
        Self {
            v: self.v.max(v_min),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub phi: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub step: usize,
    pub poses: Vec<Pose>,
    /// Master seed from which all per-(agent, step) noise streams derive.
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for agent `agent` at simulation step `step`.
pub fn agent_stream(seed: u64, agent: usize, step: usize) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(agent as u64 ^ 0xA5A5_0000_0000_0000));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(step as u64);
    rng
}

/// Places `N` agents uniformly in a disk of radius `R_init` with uniform headings.
pub fn init_world(params: &SimParams, seed: u64) -> Result<WorldState> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    rng.set_stream(u64::MAX);
    let poses = (0..params.n_agents)
        .map(|_| {
            let r = params.r_init * rng.random::<f64>().sqrt();
            let a = 2.0 * PI * rng.random::<f64>();
            // (-pi, pi]
            let theta = PI - 2.0 * PI * rng.random::<f64>();
            Pose {
                x: r * a.cos(),
                y: r * a.sin(),
                theta,
            }
        })
        .collect();
    Ok(WorldState { step: 0, poses, seed })
}

/// `sin(h)/h`, smooth through zero.
fn sinc<T: Scalar>(h: T) -> T {
    if h.value().abs() < 1e-4 {
        let h2 = h * h;
        (h2 * (1.0 / 120.0) - 1.0 / 6.0) * h2 + 1.0
    } else {
        h.sin() / h
    }
}

/// Exact-arc unicycle integration written in half-angle form, which is smooth
/// in `omega` (including at zero) and therefore safe to differentiate.
pub fn advance_pose<T: Scalar>(pose: &Pose, v: T, omega: T, dt: f64) -> (Vec2<T>, T) {
    let half = omega * (0.5 * dt);
    let heading_mid = half + pose.theta;
    let chord = v * dt * sinc(half);
    let pos = Vec2::new(chord * heading_mid.cos() + pose.x, chord * heading_mid.sin() + pose.y);
    let theta = (omega * dt + pose.theta).wrap_angle();
    (pos, theta)
}

pub fn unicycle_step(pose: &Pose, action: AgentAction, dt: f64) -> Pose {
    let AgentAction { v, omega } = action;
    let theta = pose.theta;
    if omega.abs() > EPS_OMEGA {
        // (v/w)(sin(t1) - sin t) rewritten with sum-to-product identities
        let half = 0.5 * omega * dt;
        let chord = v * dt * half.sin() / half;
        Pose {
            x: pose.x + chord * (theta + half).cos(),
            y: pose.y + chord * (theta + half).sin(),
            theta: wrap_angle(theta + omega * dt),
        }
    } else {
        Pose {
            x: pose.x + v * dt * theta.cos(),
            y: pose.y + v * dt * theta.sin(),
            theta: wrap_angle(theta + omega * dt),
        }
    }
}

pub fn true_bearing(pose_i: &Pose, pos_j: Vec2) -> Result<f64> {
    let dx = pos_j.x - pose_i.x;
    let dy = pos_j.y - pose_i.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "coincident positions at ({}, {})",
            pose_i.x, pose_i.y
        )));
    }
    Ok(wrap_angle(dy.atan2(dx) - pose_i.theta))
}

pub fn true_apparent_size(pos_i: Vec2, pos_j: Vec2, r: f64) -> Result<f64> {
    let d = pos_i.distance(pos_j);
    if d <= r {
        return Err(Error::Overlap { distance: d, radius: r });
    }
    Ok(2.0 * (r / d).asin())
}

/// Noisy cue pair from `i` about `j`, drawn from `i`'s stream at the world's step.
pub fn observe(world: &WorldState, i: usize, j: usize, params: &SimParams) -> Result<Observation> {
    let mut rng = agent_stream(world.seed, i, world.step);
    observe_with(&mut rng, world, i, j, params)
}

/// Observations of every other agent, indexed by neighbor id (`None` at `i`).
pub fn observe_all(world: &WorldState, i: usize, params: &SimParams) -> Result<Vec<Option<Observation>>> {
    let mut rng = agent_stream(world.seed, i, world.step);
    (0..world.poses.len())
        .map(|j| {
            if j == i {
                Ok(None)
            } else {
                observe_with(&mut rng, world, i, j, params).map(Some)
            }
        })
        .collect()
}

fn observe_with(
    rng: &mut ChaCha8Rng,
    world: &WorldState,
    i: usize,
    j: usize,
    params: &SimParams,
) -> Result<Observation> {
    if i == j {
        return Err(Error::DegenerateGeometry(format!("agent {i} cannot observe itself")));
    }
    let n = world.poses.len();
    if i >= n || j >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: i.max(j) + 1,
        });
    }
    let ego = &world.poses[i];
    let other = world.poses[j].position();
    let d = ego.position().distance(other);
    if d < EPS_D {
        return Err(Error::DegenerateGeometry(format!("agents {i} and {j} are {d} apart")));
    }
    let phi_true = true_bearing(ego, other)?;
    let r = params.r_body;
    let gamma_true = 2.0 * (r / d.max(r + EPS_D)).asin();

    rng.set_word_pos(j as u128 * WORDS_PER_NEIGHBOR);
    let z_phi: f64 = rng.sample(StandardNormal);
    let z_gamma: f64 = rng.sample(StandardNormal);

    let phi = wrap_angle(phi_true + params.true_sigma_phi() * z_phi);
    let gamma_noise = match params.size_noise {
        SizeNoise::Relative => params.true_sigma_gamma() * z_gamma * gamma_true,
        SizeNoise::Absolute => params.true_sigma_gamma() * z_gamma,
    };
    let gamma = (gamma_true + gamma_noise).clamp(GAMMA_MIN, PI - GAMMA_MIN);
    Ok(Observation { phi, gamma })
}

/// Advances every agent simultaneously from the current snapshot.
pub fn step_world(world: &WorldState, actions: &[AgentAction], params: &SimParams) -> Result<WorldState> {
    if actions.len() != world.poses.len() {
        return Err(Error::DimensionMismatch {
            expected: world.poses.len(),
            actual: actions.len(),
        });
    }
    let poses = world
        .poses
        .iter()
        .zip(actions)
        .map(|(p, a)| unicycle_step(p, *a, params.dt))
        .collect();
    Ok(WorldState {
        step: world.step + 1,
        poses,
        seed: world.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize) -> SimParams {
        SimParams {
            n_agents: n,
            ..SimParams::default()
        }
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let p = params(20);
        let a = init_world(&p, 7).unwrap();
        let b = init_world(&p, 7).unwrap();
        let c = init_world(&p, 8).unwrap();
        assert_eq!(a, b);
        for (pa, pb) in a.poses.iter().zip(&b.poses) {
            assert_eq!(pa.x.to_bits(), pb.x.to_bits());
            assert_eq!(pa.theta.to_bits(), pb.theta.to_bits());
        }
        assert_ne!(a.poses, c.poses);
        for pose in &a.poses {
            assert!(pose.position().norm() <= p.r_init);
            assert!(pose.theta > -PI && pose.theta <= PI);
        }
    }

    #[test]
    fn init_degenerate_disk() {
        let mut p = params(2);
        p.r_init = 0.0;
        let w = init_world(&p, 7).unwrap();
        for pose in &w.poses {
            assert_eq!((pose.x, pose.y), (0.0, 0.0));
        }
        assert_ne!(w.poses[0].theta, w.poses[1].theta);
    }

    #[test]
    fn init_rejects_invalid() {
        assert!(init_world(&params(1), 0).is_err());
        let mut p = params(5);
        p.dt = 0.0;
        assert!(init_world(&p, 0).is_err());
    }

    #[test]
    fn unicycle_examples() {
        let o = Pose::new(0.0, 0.0, 0.0);
        let p = unicycle_step(&o, AgentAction::new(1.0, 0.0), 0.1);
        assert!((p.x - 0.1).abs() < 1e-15 && p.y == 0.0 && p.theta == 0.0);

        let p = unicycle_step(&o, AgentAction::new(0.0, 1.0), 0.1);
        assert!(p.x == 0.0 && p.y == 0.0 && (p.theta - 0.1).abs() < 1e-15);

        // half circle of radius 1/pi: arc integral of (cos(pi t), sin(pi t)) over [0,1] is (0, 2/pi)
        let p = unicycle_step(&o, AgentAction::new(1.0, PI), 1.0);
        assert!(p.x.abs() < 1e-12);
        assert!((p.y - 2.0 / PI).abs() < 1e-12);
        assert!((p.theta - PI).abs() < 1e-12);
    }

    #[test]
    fn arc_matches_quadrature() {
        // midpoint quadrature of the heading integral as an independent reference
        let pose = Pose::new(3.0, -2.0, 2.5);
        let (v, w, dt) = (1.7, -0.83, 0.9);
        let n = 200_000;
        let h = dt / n as f64;
        let (mut x, mut y) = (pose.x, pose.y);
        for k in 0..n {
            let th = pose.theta + w * (k as f64 + 0.5) * h;
            x += v * th.cos() * h;
            y += v * th.sin() * h;
        }
        let p = unicycle_step(&pose, AgentAction::new(v, w), dt);
        assert!((p.x - x).abs() < 1e-9 && (p.y - y).abs() < 1e-9);
    }

    #[test]
    fn bearing_examples() {
        let o = Pose::new(0.0, 0.0, 0.0);
        assert_eq!(true_bearing(&o, Vec2::new(10.0, 0.0)).unwrap(), 0.0);
        assert!((true_bearing(&o, Vec2::new(0.0, 5.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        let r = Pose::new(1.0, 1.0, PI / 2.0);
        assert!(true_bearing(&r, Vec2::new(1.0, 11.0)).unwrap().abs() < 1e-15);
        assert!(true_bearing(&o, Vec2::ZERO).is_err());
    }

    #[test]
    fn apparent_size_examples() {
        let o = Vec2::ZERO;
        assert!((true_apparent_size(o, Vec2::new(2.0, 0.0), 1.0).unwrap() - PI / 3.0).abs() < 1e-15);
        let g = true_apparent_size(o, Vec2::new(0.0, 50.0), 1.0).unwrap();
        assert!((g - 0.040003).abs() < 1e-6);
        assert!(matches!(
            true_apparent_size(o, Vec2::new(0.5, 0.0), 1.0),
            Err(Error::Overlap { .. })
        ));
    }

    fn two_agents() -> (WorldState, SimParams) {
        let mut p = params(3);
        p.true_sigma_phi = Some(0.0);
        p.true_sigma_gamma = Some(0.0);
        let w = WorldState {
            step: 0,
            poses: vec![
                Pose::new(0.0, 0.0, 0.0),
                Pose::new(30.0, 40.0, 1.0),
                Pose::new(-5.0, 0.0, 0.0),
            ],
            seed: 3,
        };
        (w, p)
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let (w, p) = two_agents();
        let o = observe(&w, 0, 1, &p).unwrap();
        assert_eq!(o.phi, true_bearing(&w.poses[0], w.poses[1].position()).unwrap());
        assert_eq!(
            o.gamma,
            true_apparent_size(w.poses[0].position(), w.poses[1].position(), 1.0).unwrap()
        );
    }

    #[test]
    fn observation_draw_is_repeatable_and_order_free() {
        let (w, mut p) = two_agents();
        p.true_sigma_phi = Some(0.1);
        p.true_sigma_gamma = Some(0.1);
        let a = observe(&w, 0, 1, &p).unwrap();
        let b = observe(&w, 0, 1, &p).unwrap();
        assert_eq!(a, b);
        let all = observe_all(&w, 0, &p).unwrap();
        assert_eq!(all[1], Some(a));
        assert_eq!(all[2], Some(observe(&w, 0, 2, &p).unwrap()));
        assert!(all[0].is_none());
    }

    #[test]
    fn bearing_noise_statistics() {
        // sample std of bearing errors over many steps
        let (mut w, mut p) = two_agents();
        p.true_sigma_phi = Some(0.01);
        let truth = true_bearing(&w.poses[0], w.poses[1].position()).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for step in 0..n {
            w.step = step;
            let e = wrap_angle(observe(&w, 0, 1, &p).unwrap().phi - truth);
            sum += e;
            sum_sq += e * e;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((std - 0.01).abs() < 0.02 * 0.01, "std {std}");
    }

    #[test]
    fn overlapping_bodies_are_clamped_in_observation() {
        let (mut w, p) = two_agents();
        w.poses[1] = Pose::new(0.5, 0.0, 0.0);
        let o = observe(&w, 0, 1, &p).unwrap();
        assert!(o.gamma > 0.0 && o.gamma < PI);
        w.poses[1] = Pose::new(0.0, 0.0, 0.0);
        assert!(observe(&w, 0, 1, &p).is_err());
    }

    #[test]
    fn step_world_examples() {
        let p = params(2);
        let w = WorldState {
            step: 4,
            poses: vec![Pose::new(0.0, 0.0, 0.0), Pose::new(5.0, 5.0, 1.0)],
            seed: 0,
        };
        let still = step_world(&w, &[AgentAction::default(); 2], &p).unwrap();
        assert_eq!(still.poses, w.poses);
        assert_eq!(still.step, 5);

        let moved = step_world(&w, &[AgentAction::new(1.0, 0.0), AgentAction::default()], &p).unwrap();
        assert!((moved.poses[0].x - 0.1).abs() < 1e-15);
        assert_eq!(moved.poses[1], w.poses[1]);

        assert!(step_world(&w, &[AgentAction::default()], &p).is_err());
    }

    #[test]
    fn step_world_is_per_agent() {
        let p = params(3);
        let poses = vec![
            Pose::new(0.0, 0.0, 0.0),
            Pose::new(5.0, 5.0, 1.0),
            Pose::new(-3.0, 2.0, -2.0),
        ];
        let actions = [
            AgentAction::new(1.0, 0.2),
            AgentAction::new(2.0, -0.5),
            AgentAction::new(0.5, 0.0),
        ];
        let w = WorldState {
            step: 0,
            poses: poses.clone(),
            seed: 0,
        };
        let out = step_world(&w, &actions, &p).unwrap();
        let perm = [2usize, 0, 1];
        let wp = WorldState {
            step: 0,
            poses: perm.iter().map(|&k| poses[k]).collect(),
            seed: 0,
        };
        let ap: Vec<_> = perm.iter().map(|&k| actions[k]).collect();
        let outp = step_world(&wp, &ap, &p).unwrap();
        for (slot, &k) in perm.iter().enumerate() {
            assert_eq!(outp.poses[slot], out.poses[k]);
        }
    }

    proptest! {
        #[test]
        fn theta_stays_wrapped(x in -100.0..100.0f64, y in -100.0..100.0f64, th in -PI..PI,
                               v in 0.0..5.0f64, w in -1.0..1.0f64) {
            let p = unicycle_step(&Pose::new(x, y, th), AgentAction::new(v, w), 0.1);
            prop_assert_eq!(wrap_angle(p.theta), p.theta);
        }

        #[test]
        fn branch_continuity(th in -PI..PI, v in 0.0..5.0f64) {
            let pose = Pose::new(1.0, 2.0, th);
            let above = unicycle_step(&pose, AgentAction::new(v, EPS_OMEGA * 1.0001), 0.1);
            let below = unicycle_step(&pose, AgentAction::new(v, EPS_OMEGA * 0.9999), 0.1);
            prop_assert!((above.x - below.x).abs() < 1e-9);
            prop_assert!((above.y - below.y).abs() < 1e-9);
        }

        #[test]
        fn smooth_form_matches_branching_form(th in -PI..PI, v in 0.0..5.0f64, w in -1.0..1.0f64) {
            let pose = Pose::new(-4.0, 2.0, th);
            let p = unicycle_step(&pose, AgentAction::new(v, w), 0.1);
            let (pos, theta) = advance_pose(&pose, v, w, 0.1);
            prop_assert!((p.x - pos.x).abs() < 1e-12 && (p.y - pos.y).abs() < 1e-12);
            prop_assert!((wrap_angle(p.theta - theta)).abs() < 1e-12);
        }

        #[test]
        fn bearing_antisymmetry(xi in -50.0..50.0f64, yi in -50.0..50.0f64, ti in -PI..PI,
                                xj in -50.0..50.0f64, yj in -50.0..50.0f64, tj in -PI..PI) {
            prop_assume!((xi - xj).hypot(yi - yj) > 1e-3);
            let pi_ = Pose::new(xi, yi, ti);
            let pj = Pose::new(xj, yj, tj);
            let bij = true_bearing(&pi_, pj.position()).unwrap();
            let bji = true_bearing(&pj, pi_.position()).unwrap();
            let diff = wrap_angle(bij - bji - (PI + tj - ti));
            prop_assert!(diff.abs() < 1e-9);
        }
    }
}

//! Action selection by gradient descent on the expected social-distance cost.
//!
//! For each neighbor the cost is the expected absolute deviation of the
//! neighbor distance from `d0`, evaluated on a one-step lookahead posterior:
//! the action moves the ego pose, the moved pose changes the predicted cues,
//! their visibility and noise, and therefore the covariance left after a
//! fictitious measurement update. The chain is evaluated with [`Dual2`] to get
//! exact partials with respect to `(v, omega)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{BeliefBank, EgoBelief, EstimatorParams, NeighborBelief};
use crate::harness::config::SizeNoise;
use crate::linalg::{Mat2, Sym2, Vec2};
use crate::perception::{cue_geometry, visibility, EPS_COV};
use crate::scalar::{Dual2, Scalar};
use crate::world::{advance_pose, AgentAction};

/// Whether forward speed follows the cost gradient or stays at `v_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeedMode {
    Gradient,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub d0: f64,
    pub eta_v: f64,
    pub eta_omega: f64,
    pub omega_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub lookahead_dt: f64,
    pub speed_mode: SpeedMode,
}

/// Everything an agent needs to evaluate its cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    pub control: ControlParams,
    pub estimator: EstimatorParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientRecord {
    pub neighbor_id: usize,
    /// `(d cost / d v, d cost / d omega)`.
    pub grad: [f64; 2],
    pub cost: f64,
}

impl GradientRecord {
    pub fn norm(&self) -> f64 {
        self.grad[0].hypot(self.grad[1])
    }
}

/// `E|X - d0|` for `X ~ N(mu_d, sigma_d^2)`.
pub fn expected_abs_deviation(mu_d: f64, sigma_d: f64, d0: f64) -> Result<f64> {
    if !(sigma_d >= 0.0) {
        return Err(Error::invalid(
            "sigma_d",
            format!("must be non-negative, got {sigma_d}"),
        ));
    }
    Ok(expected_abs_deviation_t(mu_d, sigma_d, d0))
}

pub(crate) fn expected_abs_deviation_t<T: Scalar>(mu_d: T, sigma_d: T, d0: f64) -> T {
    let delta = mu_d - d0;
    if sigma_d.value() == 0.0 {
        return delta.abs();
    }
    let z = delta / sigma_d;
    let folded = sigma_d * (2.0 / PI).sqrt() * (-(z * z) * 0.5).exp();
    folded + delta * ((-z).norm_cdf() * -2.0 + 1.0)
}

/// Cost for one neighbor after a one-step lookahead under `(v, omega)`.
pub(crate) fn lookahead_cost<T: Scalar>(
    v: T,
    omega: T,
    ego: &EgoBelief,
    belief: &NeighborBelief,
    model: &AgentModel,
) -> Result<T> {
    let est = &model.estimator;
    let h = model.control.lookahead_dt;
    let (pos, theta) = advance_pose(&ego.mean, v, omega, h);
    let prior: Sym2<T> = Sym2::lift(belief.cov.add_diag(est.q * h));
    let g = cue_geometry(pos, theta, Vec2::lift(belief.mean), est.r_body)?;

    let p = visibility(g.bearing, &est.fov);
    let p = if p.value() < est.eps_vis {
        T::cst(est.eps_vis)
    } else {
        p
    };
    let sg = match est.size_noise {
        SizeNoise::Relative => g.gamma * est.sigma_gamma,
        SizeNoise::Absolute => T::cst(est.sigma_gamma),
    };
    let r = Sym2::diag(T::cst(est.sigma_phi * est.sigma_phi) / p, sg * sg / p);
    let hm = Mat2::from_rows(g.h_bearing, g.h_size);
    let s = hm.congruence(prior).add(r);
    // information gained: H^T S^-1 H
    let info = hm.transpose().congruence(s.inverse());
    let posterior = prior.sub(Mat2::sym(prior).congruence(info));

    let var = posterior.quad(g.u);
    let var = if var.value() < EPS_COV { T::cst(EPS_COV) } else { var };
    Ok(expected_abs_deviation_t(g.d, var.sqrt(), model.control.d0))
}

pub fn neighbor_cost(action: AgentAction, ego: &EgoBelief, belief: &NeighborBelief, model: &AgentModel) -> Result<f64> {
    if !belief.alive {
        return Err(Error::DegenerateGeometry("cost of a dropped belief".into()));
    }
    lookahead_cost(action.v, action.omega, ego, belief, model)
}

pub fn cost_gradient(
    neighbor_id: usize,
    action: AgentAction,
    ego: &EgoBelief,
    belief: &NeighborBelief,
    model: &AgentModel,
) -> Result<GradientRecord> {
    if !belief.alive {
        return Err(Error::DegenerateGeometry("gradient of a dropped belief".into()));
    }
    let c = lookahead_cost(Dual2::var(action.v, 0), Dual2::var(action.omega, 1), ego, belief, model)?;
    if !c.is_finite() {
        return Err(Error::NonFiniteGradient {
            neighbor: neighbor_id,
            state: format!("action {action:?}, ego {:?}, belief {belief:?}, cost {c:?}", ego.mean),
        });
    }
    Ok(GradientRecord {
        neighbor_id,
        grad: c.eps,
        cost: c.re,
    })
}

/// Result of one action-selection pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub action: AgentAction,
    pub selected: Option<GradientRecord>,
    /// Neighbors whose gradient could not be evaluated.
    pub skipped: usize,
}

/// Descends the steepest single-neighbor gradient from the previous action.
pub fn select_action(prev: AgentAction, ego: &EgoBelief, bank: &BeliefBank, model: &AgentModel) -> Selection {
    let mut best: Option<GradientRecord> = None;
    let mut skipped = 0;
    let fixed = model.control.speed_mode == SpeedMode::Fixed;
    let steepness = |g: &GradientRecord| {
        if fixed {
            g.grad[1].abs()
        } else {
            g.norm()
        }
    };
    for (j, belief) in bank.alive() {
        match cost_gradient(j, prev, ego, belief, model) {
            // strict comparison keeps the lowest id on ties
            Ok(rec) => {
                if best.as_ref().map_or(true, |b| steepness(&rec) > steepness(b)) {
                    best = Some(rec);
                }
            }
            Err(_) => skipped += 1,
        }
    }
    let c = &model.control;
    let action = match best {
        Some(rec) => {
            let v = if fixed { c.v_max } else { prev.v - c.eta_v * rec.grad[0] };
            AgentAction::new(v, prev.omega - c.eta_omega * rec.grad[1])
        }
        None if fixed => AgentAction::new(c.v_max, 0.0),
        None => AgentAction::new(prev.v * 0.9, 0.0),
    };
    Selection {
        action: action.clamped(c.v_max, c.omega_max).with_min_speed(c.v_min),
        selected: best,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::FovParams;
    use crate::world::Pose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn model(psi: f64) -> AgentModel {
        AgentModel {
            control: ControlParams {
                d0: 50.0,
                eta_v: 5.0,
                eta_omega: 5.0,
                omega_max: 0.9,
                v_min: 0.0,
                v_max: 5.0,
                lookahead_dt: 0.1,
                speed_mode: SpeedMode::Gradient,
            },
            estimator: EstimatorParams {
                q: 0.1,
                q_ego: 0.0,
                sigma_phi: 0.01,
                sigma_gamma: 0.01,
                size_noise: SizeNoise::Relative,
                memory: true,
                tau_vis: 0.5,
                eps_vis: 1e-6,
                r_body: 1.0,
                fov: FovParams { psi, k_vis: 10.0 },
            },
        }
    }

    #[test]
    fn abs_deviation_examples() {
        assert!((expected_abs_deviation(50.0, 1.0, 50.0).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert_eq!(expected_abs_deviation(60.0, 0.0, 50.0).unwrap(), 10.0);
        assert!((expected_abs_deviation(52.0, 2.0, 50.0).unwrap() - 2.3333).abs() < 1e-4);
        assert!(expected_abs_deviation(50.0, -1.0, 50.0).is_err());
    }

    #[test]
    fn abs_deviation_increases_with_sigma() {
        for delta in [-20.0, -1.0, 0.0, 0.5, 15.0] {
            let mut prev = expected_abs_deviation(50.0 + delta, 0.0, 50.0).unwrap();
            for k in 1..200 {
                let sigma = 0.05 * k as f64;
                let c = expected_abs_deviation(50.0 + delta, sigma, 50.0).unwrap();
                // strictly increasing once the tails are resolvable
                if sigma > delta.abs() / 6.0 {
                    assert!(c > prev, "delta {delta} sigma {sigma}");
                } else {
                    assert!(c >= prev - 1e-12);
                }
                prev = c;
            }
        }
    }

    fn straight_ahead(dist: f64, var: f64) -> (EgoBelief, NeighborBelief) {
        let ego = EgoBelief::exact(Pose::new(0.0, 0.0, 0.0));
        let b = NeighborBelief::new(Vec2::new(dist, 0.0), Sym2::identity().scale(var), 1.0);
        (ego, b)
    }

    #[test]
    fn symmetric_optimum() {
        let mut m = model(2.0 * PI);
        m.estimator.q = 0.0;
        let (ego, b) = straight_ahead(50.0, 1e-8);
        let g = cost_gradient(1, AgentAction::new(0.0, 0.0), &ego, &b, &m).unwrap();
        assert!(g.cost < 1e-3);
        assert!(g.grad[1].abs() < 1e-8);
    }

    #[test]
    fn approach_reduces_cost_when_far() {
        let m = model(2.0 * PI);
        let (ego, b) = straight_ahead(100.0, 1e-6);
        let g = cost_gradient(1, AgentAction::new(1.0, 0.0), &ego, &b, &m).unwrap();
        assert!(g.grad[0] < 0.0);
        assert!(g.grad[1].abs() < 1e-8);
    }

    #[test]
    fn uncertainty_path_is_live() {
        let m = model(2.0 * PI);
        let a = AgentAction::new(0.0, 0.1);
        let ego = EgoBelief::exact(Pose::new(0.0, 0.0, 0.3));
        let mut prev = 0.0;
        for k in 0..30 {
            let var = 0.01 * 1.5f64.powi(k);
            // at the preferred distance, so only the spread contributes
            let b = NeighborBelief::new(Vec2::new(40.0, 30.0), Sym2::new(var, 0.2 * var, 0.7 * var), 1.0);
            let c = neighbor_cost(a, &ego, &b, &m).unwrap();
            assert!(c > prev, "cost {c} not above {prev} at var {var}");
            prev = c;
        }
    }

    #[test]
    fn fov_path_turns_toward_boundary_neighbor() {
        let psi = PI / 2.0;
        let mut m = model(psi);
        m.estimator.sigma_phi = 0.05;
        m.estimator.sigma_gamma = 0.2;
        let ego = EgoBelief::exact(Pose::new(0.0, 0.0, 0.0));
        for side in [1.0, -1.0] {
            // just outside the left/right edge of the field of view
            let a = side * (psi / 2.0 + 0.05);
            let b = NeighborBelief::new(
                Vec2::new(60.0 * a.cos(), 60.0 * a.sin()),
                Sym2::identity().scale(400.0),
                0.3,
            );
            let g = cost_gradient(1, AgentAction::new(1.0, 0.0), &ego, &b, &m).unwrap();
            // turning toward the neighbor (sign of `side`) must lower cost
            assert!(g.grad[1] * side < 0.0, "grad {:?} side {side}", g.grad);
            let dw = 0.05 * side;
            let toward = neighbor_cost(AgentAction::new(1.0, dw), &ego, &b, &m).unwrap();
            let away = neighbor_cost(AgentAction::new(1.0, -dw), &ego, &b, &m).unwrap();
            assert!(toward < away);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-5;
        for _ in 0..1000 {
            let psi = [PI / 2.0, PI, 1.5 * PI, 2.0 * PI][rng.random_range(0..4)];
            let mut m = model(psi);
            m.estimator.sigma_phi = 10f64.powf(rng.random_range(-3.0..2.0));
            m.estimator.sigma_gamma = 10f64.powf(rng.random_range(-3.0..2.0));
            m.estimator.q = 10f64.powf(rng.random_range(-2.0..1.0));
            let ego = EgoBelief::exact(Pose::new(0.0, 0.0, rng.random_range(-PI..PI)));
            let d = rng.random_range(5.0..150.0);
            let a = rng.random_range(-PI..PI);
            let s = 10f64.powf(rng.random_range(-1.0..2.0));
            let b = NeighborBelief::new(Vec2::new(d * a.cos(), d * a.sin()), Sym2::new(s, 0.3 * s, 0.5 * s), 0.5);
            let act = AgentAction::new(rng.random_range(0.0..5.0), rng.random_range(-0.9..0.9));
            let g = cost_gradient(1, act, &ego, &b, &m).unwrap();
            let f = |v: f64, w: f64| neighbor_cost(AgentAction::new(v, w), &ego, &b, &m).unwrap();
            let fd = [
                (f(act.v + h, act.omega) - f(act.v - h, act.omega)) / (2.0 * h),
                (f(act.v, act.omega + h) - f(act.v, act.omega - h)) / (2.0 * h),
            ];
            let err = (g.grad[0] - fd[0]).hypot(g.grad[1] - fd[1]);
            assert!(err / g.norm().max(1e-6) < 1e-4, "{:?} vs {fd:?}", g.grad);
        }
    }

    fn bank_with(beliefs: &[(usize, NeighborBelief)], n: usize) -> BeliefBank {
        let mut bank = BeliefBank::new(0, n);
        for (j, b) in beliefs {
            bank.slots[*j] = *b;
        }
        bank
    }

    #[test]
    fn single_neighbor_is_selected_and_clamped() {
        let mut m = model(2.0 * PI);
        m.control.omega_max = 0.3;
        let (ego, b) = straight_ahead(120.0, 1.0);
        let bank = bank_with(&[(2, b)], 3);
        let sel = select_action(AgentAction::new(1.0, 5.0), &ego, &bank, &m);
        assert_eq!(sel.selected.unwrap().neighbor_id, 2);
        assert_eq!(sel.action.omega, 0.3);
        assert!(sel.action.v >= 0.0 && sel.action.v <= 5.0);
    }

    #[test]
    fn steepest_neighbor_wins() {
        let m = model(2.0 * PI);
        let ego = EgoBelief::exact(Pose::new(0.0, 0.0, 0.0));
        let prev = AgentAction::new(1.0, 0.0);
        let near = NeighborBelief::new(Vec2::new(49.0, 3.0), Sym2::identity().scale(30.0), 1.0);
        let far = NeighborBelief::new(Vec2::new(150.0, -10.0), Sym2::identity().scale(1.0), 1.0);
        let g1 = cost_gradient(1, prev, &ego, &near, &m).unwrap();
        let g2 = cost_gradient(2, prev, &ego, &far, &m).unwrap();
        let expected = if g2.norm() > g1.norm() { 2 } else { 1 };
        assert_ne!(g1.norm(), g2.norm());
        let bank = bank_with(&[(1, near), (2, far)], 3);
        let sel = select_action(prev, &ego, &bank, &m);
        assert_eq!(sel.selected.unwrap().neighbor_id, expected);
        let rec = if expected == 1 { g1 } else { g2 };
        assert_eq!(
            sel.action,
            AgentAction::new(prev.v - 5.0 * rec.grad[0], prev.omega - 5.0 * rec.grad[1]).clamped(5.0, 0.9)
        );
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let m = model(2.0 * PI);
        let (ego, b) = straight_ahead(80.0, 1.0);
        let bank = bank_with(&[(3, b), (1, b), (2, b)], 4);
        let sel = select_action(AgentAction::new(1.0, 0.0), &ego, &bank, &m);
        assert_eq!(sel.selected.unwrap().neighbor_id, 1);
    }

    #[test]
    fn no_alive_beliefs_decays_speed() {
        let m = model(2.0 * PI);
        let ego = EgoBelief::exact(Pose::new(0.0, 0.0, 0.0));
        let sel = select_action(AgentAction::new(2.0, 0.4), &ego, &BeliefBank::new(0, 3), &m);
        assert_eq!(sel.action, AgentAction::new(1.8, 0.0));
        assert!(sel.selected.is_none());
    }
}

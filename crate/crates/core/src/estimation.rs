//! Recursive Gaussian estimators.
//!
//! Each agent owns an [`EgoBelief`] propagated from its own actions and a
//! [`BeliefBank`] with one extended Kalman filter per neighbor. Neighbor
//! states are world-frame positions under a random-walk process model.
//! Visibility never hard-gates an update: it inflates the measurement noise
//! as `R / max(p_vis, eps_vis)`.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::SizeNoise;
use crate::linalg::{Mat2, Sym2, Vec2};
use crate::perception::{self, cue_geometry, inverse_measurement, size_noise_std, FovParams, EPS_COV};
use crate::scalar::wrap_angle;
use crate::world::{unicycle_step, AgentAction, Observation, Pose, EPS_D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborBelief {
    pub mean: Vec2,
    pub cov: Sym2,
    pub p_vis: f64,
    pub alive: bool,
    pub steps_unseen: usize,
}

impl NeighborBelief {
    pub fn dead() -> Self {
        Self {
            mean: Vec2::ZERO,
            cov: Sym2::identity().scale(EPS_COV),
            p_vis: 0.0,
            alive: false,
            steps_unseen: 0,
        }
    }

    pub fn new(mean: Vec2, cov: Sym2, p_vis: f64) -> Self {
        Self {
            mean,
            cov,
            p_vis,
            alive: true,
            steps_unseen: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoBelief {
    pub mean: Pose,
    pub cov: Matrix3<f64>,
}

impl EgoBelief {
    pub fn exact(pose: Pose) -> Self {
        Self {
            mean: pose,
            cov: Matrix3::identity() * EPS_COV,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    /// Random-walk intensity for neighbor positions (length^2 / time).
    pub q: f64,
    /// Isotropic process-noise intensity for the ego pose.
    pub q_ego: f64,
    /// Assumed bearing noise std.
    pub sigma_phi: f64,
    /// Assumed apparent-size noise std (relative or absolute per `size_noise`).
    pub sigma_gamma: f64,
    pub size_noise: SizeNoise,
    pub memory: bool,
    pub tau_vis: f64,
    /// Floor on `p_vis` when inflating measurement noise.
    pub eps_vis: f64,
    pub r_body: f64,
    pub fov: FovParams,
}

/// Propagates the ego pose through the unicycle model with linearized covariance.
pub fn propagate_ego(belief: &EgoBelief, action: AgentAction, dt: f64, q_ego: f64) -> EgoBelief {
    let mean = unicycle_step(&belief.mean, action, dt);
    let half = 0.5 * action.omega * dt;
    let sinc = if half.abs() < 1e-4 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    let chord = action.v * dt * sinc;
    let heading = belief.mean.theta + half;
    #[rustfmt::skip]
    let f = Matrix3::new(
        1.0, 0.0, -chord * heading.sin(),
        0.0, 1.0, chord * heading.cos(),
        0.0, 0.0, 1.0,
    );
    let mut cov = f * belief.cov * f.transpose() + Matrix3::identity() * (q_ego * dt);
    cov = 0.5 * (cov + cov.transpose());
    floor_spd3(&mut cov, EPS_COV);
    EgoBelief { mean, cov }
}

fn floor_spd3(cov: &mut Matrix3<f64>, floor: f64) {
    let eig = cov.symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return;
    }
    let clipped = eig
        .eigenvalues
        .map(|l| if l.is_finite() { l.max(floor) } else { floor });
    *cov = eig.eigenvectors * Matrix3::from_diagonal(&clipped) * eig.eigenvectors.transpose();
}

/// Random-walk prediction: mean unchanged, covariance grows by `q dt I`.
pub fn predict_neighbor(belief: &NeighborBelief, q: f64, dt: f64) -> Result<NeighborBelief> {
    if !belief.alive {
        return Err(Error::DegenerateGeometry("cannot predict a dropped belief".into()));
    }
    Ok(NeighborBelief {
        cov: belief.cov.add_diag(q * dt),
        ..*belief
    })
}

/// Visibility of a belief as judged from the ego mean.
pub fn predicted_visibility(belief: &NeighborBelief, ego: &EgoBelief, fov: &FovParams) -> Result<f64> {
    let b = perception::predict_bearing(&ego.mean, belief.mean)?;
    Ok(perception::visibility(b.value, fov))
}

/// Outcome of a single measurement update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Update {
    pub belief: NeighborBelief,
    /// The posterior covariance needed eigenvalue flooring.
    pub floored: bool,
}

/// Extended Kalman update from a stacked (bearing, size) observation.
pub fn update_neighbor(
    belief: &NeighborBelief,
    obs: &Observation,
    ego: &EgoBelief,
    params: &EstimatorParams,
) -> Result<Update> {
    if !belief.alive {
        return Err(Error::DegenerateGeometry("cannot update a dropped belief".into()));
    }
    let g = cue_geometry(ego.mean.position(), ego.mean.theta, belief.mean, params.r_body)?;
    let p_vis = perception::visibility(g.bearing, &params.fov);
    let inflate = 1.0 / p_vis.max(params.eps_vis);
    let sg = size_noise_std(params.sigma_gamma, g.gamma, params.size_noise);
    let r = Sym2::diag(params.sigma_phi * params.sigma_phi * inflate, sg * sg * inflate);

    let h = Mat2::from_rows(g.h_bearing, g.h_size);
    let p = belief.cov;
    let s = h.congruence(p).add(r);
    // K = P H^T S^-1
    let pht = Mat2::sym(p).mul(h.transpose());
    let k = pht.mul(Mat2::sym(s.inverse()));
    let innovation = Vec2::new(wrap_angle(obs.phi - g.bearing), obs.gamma - g.gamma);
    let mean = belief.mean.add(k.mul_vec(innovation));

    // Joseph form
    let kh = k.mul(h);
    let i_kh = Mat2 {
        m: [[1.0 - kh.m[0][0], -kh.m[0][1]], [-kh.m[1][0], 1.0 - kh.m[1][1]]],
    };
    let mut cov = i_kh.congruence(p).add(k.congruence(r));
    let floored = cov.floor_eigenvalues(EPS_COV);
    if !(mean.x.is_finite() && mean.y.is_finite()) {
        return Err(Error::DegenerateGeometry("non-finite posterior mean".into()));
    }
    Ok(Update {
        belief: NeighborBelief {
            mean,
            cov,
            p_vis,
            alive: true,
            steps_unseen: belief.steps_unseen,
        },
        floored,
    })
}

/// First-order distance belief `(mu_d, sigma_d)` from ego position to a neighbor.
pub fn distance_belief(belief: &NeighborBelief, ego_pos: Vec2) -> Result<(f64, f64)> {
    if !belief.alive {
        return Err(Error::DegenerateGeometry("dropped belief has no distance".into()));
    }
    let delta = belief.mean.sub(ego_pos);
    let mu_d = delta.norm();
    if mu_d <= EPS_D {
        return Err(Error::DegenerateGeometry(format!("distance {mu_d} below {EPS_D}")));
    }
    let u = delta.scale(1.0 / mu_d);
    Ok((mu_d, belief.cov.quad(u).max(0.0).sqrt()))
}

/// Counters accumulated while stepping a bank.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankDiagnostics {
    pub floored: usize,
    pub dropped: usize,
    pub reinitialized: usize,
    /// Beliefs reset because their mean fell inside the ego body.
    pub reset_overlap: usize,
}

impl BankDiagnostics {
    pub fn merge(&mut self, o: &BankDiagnostics) {
        self.floored += o.floored;
        self.dropped += o.dropped;
        self.reinitialized += o.reinitialized;
        self.reset_overlap += o.reset_overlap;
    }
}

/// One belief slot per agent id; the owner's own slot stays dead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefBank {
    pub owner: usize,
    pub slots: Vec<NeighborBelief>,
    initialized: bool,
}

impl BeliefBank {
    pub fn new(owner: usize, n_agents: usize) -> Self {
        Self {
            owner,
            slots: vec![NeighborBelief::dead(); n_agents],
            initialized: false,
        }
    }

    pub fn alive(&self) -> impl Iterator<Item = (usize, &NeighborBelief)> {
        self.slots.iter().enumerate().filter(|(_, b)| b.alive)
    }

    fn initialize_from(&self, ego: &EgoBelief, obs: &Observation, params: &EstimatorParams) -> Result<NeighborBelief> {
        let (mean, cov) = inverse_measurement(
            &ego.mean,
            obs,
            params.r_body,
            params.sigma_phi,
            params.sigma_gamma,
            params.size_noise,
        )?;
        Ok(NeighborBelief::new(
            mean,
            cov,
            perception::visibility(obs.phi, &params.fov),
        ))
    }

    /// Predict, gate and update every slot from this step's observations.
    ///
    /// With memory all beliefs persist and are updated with visibility-weighted
    /// gain. Without memory a belief whose predicted visibility drops below
    /// `tau_vis` is discarded, and re-initialized from the inverse measurement
    /// at the first step its observed bearing is visible again. On the very
    /// first call with memory every neighbor is initialized from its observation.
    pub fn step(
        &mut self,
        observations: &[Option<Observation>],
        ego: &EgoBelief,
        params: &EstimatorParams,
        dt: f64,
    ) -> Result<BankDiagnostics> {
        if observations.len() != self.slots.len() {
            return Err(Error::DimensionMismatch {
                expected: self.slots.len(),
                actual: observations.len(),
            });
        }
        let first = !self.initialized;
        self.initialized = true;
        let mut diag = BankDiagnostics::default();
        for j in 0..self.slots.len() {
            let Some(obs) = observations[j].as_ref() else {
                continue;
            };
            if j == self.owner {
                continue;
            }
            let slot = self.slots[j];
            if !slot.alive {
                let p_obs = perception::visibility(obs.phi, &params.fov);
                if (first && params.memory) || p_obs >= params.tau_vis {
                    self.slots[j] = self.initialize_from(ego, obs, params)?;
                    if !first {
                        diag.reinitialized += 1;
                    }
                } else {
                    self.slots[j].steps_unseen += 1;
                }
                continue;
            }
            let predicted = predict_neighbor(&slot, params.q, dt)?;
            let p_vis = match predicted_visibility(&predicted, ego, &params.fov) {
                Ok(p) => p,
                Err(_) => {
                    self.slots[j] = self.initialize_from(ego, obs, params)?;
                    diag.reset_overlap += 1;
                    continue;
                }
            };
            if !params.memory && p_vis < params.tau_vis {
                self.slots[j] = NeighborBelief {
                    alive: false,
                    p_vis,
                    steps_unseen: 1,
                    ..predicted
                };
                diag.dropped += 1;
                continue;
            }
            match update_neighbor(&predicted, obs, ego, params) {
                Ok(up) => {
                    let mut b = up.belief;
                    b.steps_unseen = if p_vis < params.tau_vis {
                        slot.steps_unseen + 1
                    } else {
                        0
                    };
                    diag.floored += usize::from(up.floored);
                    self.slots[j] = b;
                }
                Err(_) => {
                    self.slots[j] = self.initialize_from(ego, obs, params)?;
                    diag.reset_overlap += 1;
                }
            }
        }
        Ok(diag)
    }
}

/// Functional form of [`BeliefBank::step`].
pub fn apply_memory_policy(
    bank: &BeliefBank,
    observations: &[Option<Observation>],
    ego: &EgoBelief,
    params: &EstimatorParams,
    dt: f64,
) -> Result<BeliefBank> {
    let mut next = bank.clone();
    next.step(observations, ego, params, dt)?;
    Ok(next)
}

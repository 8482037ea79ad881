//! Measurement models for the two angular cues, the soft field-of-view gate,
//! and the inverse model used to (re)initialize neighbor beliefs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::SizeNoise;
use crate::linalg::{Sym2, Vec2};
use crate::scalar::Scalar;
use crate::world::{Observation, Pose, EPS_D};

/// Covariance eigenvalue floor shared by all estimators.
pub const EPS_COV: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPrediction {
    pub value: f64,
    /// Gradient with respect to the neighbor's world position.
    pub jac_neighbor: Vec2,
    /// Gradient with respect to the ego pose `(x, y, theta)`.
    pub jac_ego: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovParams {
    /// Full field-of-view angle in radians.
    pub psi: f64,
    pub k_vis: f64,
}

impl FovParams {
    pub fn is_omnidirectional(&self) -> bool {
        self.psi >= 2.0 * PI - 1e-12
    }
}

/// Predicted cues and their neighbor-position Jacobians, generic so the
/// lookahead chain can carry derivatives through the ego pose.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CueGeometry<T> {
    pub d: T,
    /// Unit vector from ego to neighbor.
    pub u: Vec2<T>,
    pub bearing: T,
    pub h_bearing: Vec2<T>,
    pub gamma: T,
    pub h_size: Vec2<T>,
}

pub(crate) fn cue_geometry<T: Scalar>(ego_pos: Vec2<T>, ego_theta: T, mu: Vec2<T>, r: f64) -> Result<CueGeometry<T>> {
    let delta = mu.sub(ego_pos);
    let d2 = delta.norm_sq();
    let d = d2.sqrt();
    if !(d.value() > r) || d.value() < EPS_D {
        return Err(Error::Overlap {
            distance: d.value(),
            radius: r,
        });
    }
    let bearing = (delta.y.atan2(delta.x) - ego_theta).wrap_angle();
    let h_bearing = Vec2::new(-delta.y / d2, delta.x / d2);
    let ratio = T::cst(r) / d;
    let gamma = ratio.asin() * 2.0;
    // d gamma / d d = -2r / (d^2 sqrt(1 - r^2/d^2))
    let dgamma_dd = -(T::cst(2.0 * r) / (d2 * (-(ratio * ratio) + 1.0).sqrt()));
    let u = delta.scale(T::cst(1.0) / d);
    let h_size = u.scale(dgamma_dd);
    Ok(CueGeometry {
        d,
        u,
        bearing,
        h_bearing,
        gamma,
        h_size,
    })
}

pub fn predict_bearing(ego: &Pose, mu_j: Vec2) -> Result<MeasurementPrediction> {
    let dx = mu_j.x - ego.x;
    let dy = mu_j.y - ego.y;
    let d2 = dx * dx + dy * dy;
    if d2.sqrt() <= EPS_D {
        return Err(Error::DegenerateGeometry(format!(
            "neighbor estimate within {EPS_D} of ego"
        )));
    }
    Ok(MeasurementPrediction {
        value: crate::scalar::wrap_angle(dy.atan2(dx) - ego.theta),
        jac_neighbor: Vec2::new(-dy / d2, dx / d2),
        jac_ego: [dy / d2, -dx / d2, -1.0],
    })
}

pub fn predict_size(ego_pos: Vec2, mu_j: Vec2, r: f64) -> Result<MeasurementPrediction> {
    let g = cue_geometry(ego_pos, 0.0, mu_j, r)?;
    Ok(MeasurementPrediction {
        value: g.gamma,
        jac_neighbor: g.h_size,
        jac_ego: [-g.h_size.x, -g.h_size.y, 0.0],
    })
}

/// Numerically stable logistic function.
pub(crate) fn logistic<T: Scalar>(z: T) -> T {
    if z.value() >= 0.0 {
        T::cst(1.0) / ((-z).exp() + 1.0)
    } else {
        let e = z.exp();
        e / (e + 1.0)
    }
}

/// Soft visibility of a neighbor at the given (wrapped) bearing.
pub fn visibility<T: Scalar>(bearing: T, fov: &FovParams) -> T {
    if fov.is_omnidirectional() {
        return T::cst(1.0);
    }
    logistic((-bearing.abs() + 0.5 * fov.psi) * fov.k_vis)
}

/// Absolute apparent-size noise std at cue value `gamma`.
pub fn size_noise_std(sigma_gamma: f64, gamma: f64, mode: SizeNoise) -> f64 {
    match mode {
        SizeNoise::Relative => sigma_gamma * gamma,
        SizeNoise::Absolute => sigma_gamma,
    }
}

/// Gaussian estimate of the neighbor position implied by a single observation.
pub fn inverse_measurement(
    ego: &Pose,
    obs: &Observation,
    r: f64,
    sigma_phi: f64,
    sigma_gamma: f64,
    mode: SizeNoise,
) -> Result<(Vec2, Sym2)> {
    if !(obs.gamma > 0.0 && obs.gamma < PI) {
        return Err(Error::InvalidApparentSize(obs.gamma));
    }
    let half = 0.5 * obs.gamma;
    let d = r / half.sin();
    let heading = ego.theta + obs.phi;
    let (s, c) = heading.sin_cos();
    let mean = Vec2::new(ego.x + d * c, ego.y + d * s);
    // columns of the inverse-map Jacobian: d/dphi and d/dgamma
    let dd_dgamma = -r * half.cos() / (2.0 * half.sin() * half.sin());
    let j_phi = Vec2::new(-d * s, d * c);
    let j_gamma = Vec2::new(dd_dgamma * c, dd_dgamma * s);
    let var_phi = sigma_phi * sigma_phi;
    let sg = size_noise_std(sigma_gamma, obs.gamma, mode);
    let var_gamma = sg * sg;
    let mut cov = Sym2::new(
        var_phi * j_phi.x * j_phi.x + var_gamma * j_gamma.x * j_gamma.x,
        var_phi * j_phi.x * j_phi.y + var_gamma * j_gamma.x * j_gamma.y,
        var_phi * j_phi.y * j_phi.y + var_gamma * j_gamma.y * j_gamma.y,
    )
    .add_diag(EPS_COV);
    cov.floor_eigenvalues(EPS_COV);
    Ok((mean, cov))
}

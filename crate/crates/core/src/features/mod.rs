//! Trajectory feature maps `f(ξ)` and their derivatives with respect to
//! the action sequence.

mod driving;
mod kinematics;
mod path;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use driving::{
    desired_velocity, driving_features, DesiredVelocity, DesiredVelocityFormula, FeatureConfig,
};
pub use kinematics::{kinematic_profile, KinematicProfile};
pub use path::{curvature_at, frenet_project, CurvatureSample, ReferencePath, SdTrajectory, DEFAULT_CORRIDOR};

use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::types::{FeatureVector, Trajectory};

/// `[Σ|x_i|², Σ|u_i|²]` over the stored steps, so that with `θ ∝ (q, r)`
/// the linear cost equals the LQR cost up to scale.
pub fn lqr_features(traj: &Trajectory) -> FeatureVector {
    let (mut fx, mut fu) = (0.0, 0.0);
    for (x, u) in traj.states().iter().zip(traj.actions()) {
        fx += x.as_slice().iter().map(|v| v * v).sum::<f64>();
        fu += u.as_slice().iter().map(|v| v * v).sum::<f64>();
    }
    FeatureVector::new(vec![fx, fu]).expect("squares of finite values are finite")
}

/// The feature map in use. Serializes as its descriptor; for driving
/// features that includes the reference path waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSet {
    LqrQuadratic,
    DrivingLongitudinal {
        path: Arc<ReferencePath>,
        config: FeatureConfig,
    },
}

/// Per-feature gradients and Hessians with respect to the flattened action
/// sequence, evaluated at one trajectory.
///
/// Hessians are shared behind an `Arc` whenever they do not depend on the
/// trajectory values (quadratic features of a linear model), which lets
/// downstream solvers factor them once for many demonstrations.
#[derive(Debug, Clone)]
pub struct FeatureDerivatives {
    pub gradients: Vec<DVector<f64>>,
    pub hessians: Arc<Vec<DMatrix<f64>>>,
}

impl FeatureDerivatives {
    pub fn dim(&self) -> usize {
        self.gradients.first().map_or(0, |g| g.len())
    }
}

impl FeatureSet {
    pub fn driving(path: ReferencePath, config: FeatureConfig) -> Self {
        FeatureSet::DrivingLongitudinal {
            path: Arc::new(path),
            config,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureSet::LqrQuadratic => 2,
            FeatureSet::DrivingLongitudinal { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureSet::LqrQuadratic => "lqr",
            FeatureSet::DrivingLongitudinal { .. } => "driving",
        }
    }

    /// Shortest trajectory the map accepts.
    pub fn min_length(&self) -> usize {
        match self {
            FeatureSet::LqrQuadratic => 2,
            FeatureSet::DrivingLongitudinal { .. } => kinematics::MIN_PROFILE_SAMPLES,
        }
    }

    /// State components that carry position, used by trajectory metrics.
    pub fn position_components(&self) -> Vec<usize> {
        vec![0]
    }

    pub fn validate(&self) -> Result<()> {
        if let FeatureSet::DrivingLongitudinal { config, .. } = self {
            config.validate()?;
        }
        Ok(())
    }

    pub fn evaluate(&self, traj: &Trajectory) -> Result<FeatureVector> {
        if traj.len() < self.min_length() {
            return Err(Error::TooShort {
                context: format!("{} features", self.name()),
                needed: self.min_length(),
                found: traj.len(),
            });
        }
        match self {
            FeatureSet::LqrQuadratic => Ok(lqr_features(traj)),
            FeatureSet::DrivingLongitudinal { path, config } => {
                FeatureVector::new(driving::driving_features_raw(
                    &traj.component(0),
                    traj.dt(),
                    path,
                    config,
                ).to_vec())
            }
        }
    }

    /// Features of the rollout of `actions` from `x0`, without validation.
    pub(crate) fn evaluate_flat(&self, model: &DynamicsModel, x0: &[f64], actions: &[f64]) -> Vec<f64> {
        let states = model.rollout_flat(x0, actions);
        match self {
            FeatureSet::LqrQuadratic => vec![
                states.iter().map(|v| v * v).sum(),
                actions.iter().map(|v| v * v).sum(),
            ],
            FeatureSet::DrivingLongitudinal { path, config } => {
                let n = model.state_dim();
                let s: Vec<f64> = states.iter().step_by(n).copied().collect();
                driving::driving_features_raw(&s, model.dt(), path, config).to_vec()
            }
        }
    }

    pub(crate) fn check_model(&self, model: &DynamicsModel, traj: &Trajectory) -> Result<()> {
        if traj.state_dim() != model.state_dim() {
            return Err(Error::dims("trajectory state", model.state_dim(), traj.state_dim()));
        }
        if traj.action_dim() != model.action_dim() {
            return Err(Error::dims("trajectory action", model.action_dim(), traj.action_dim()));
        }
        if traj.len() < self.min_length() {
            return Err(Error::TooShort {
                context: format!("{} features", self.name()),
                needed: self.min_length(),
                found: traj.len(),
            });
        }
        Ok(())
    }

    /// Gradients and Hessians of every feature with respect to the action
    /// sequence of `traj`, states eliminated by rollout from its first state.
    pub fn derivatives(
        &self,
        model: &DynamicsModel,
        traj: &Trajectory,
        fd_step: f64,
    ) -> Result<FeatureDerivatives> {
        self.check_model(model, traj)?;
        let x0 = traj.states()[0].as_slice().to_vec();
        let u = traj.flat_actions();
        match self {
            FeatureSet::LqrQuadratic => {
                let sens = Arc::new(QuadraticSensitivity::new(model, traj.len()));
                Ok(sens.derivatives(&traj_states_flat(traj), &u))
            }
            FeatureSet::DrivingLongitudinal { .. } => Ok(self.gauss_newton_derivatives(model, &x0, &u, fd_step)),
        }
    }

    /// [`FeatureSet::derivatives`] over many trajectories, sharing the
    /// trajectory-independent Hessians between equal-length demonstrations.
    pub fn derivatives_batch(
        &self,
        model: &DynamicsModel,
        demos: &[&Trajectory],
        fd_step: f64,
    ) -> Result<Vec<FeatureDerivatives>> {
        for t in demos {
            self.check_model(model, t)?;
        }
        match self {
            FeatureSet::LqrQuadratic => {
                let mut cache: HashMap<usize, Arc<QuadraticSensitivity>> = HashMap::new();
                for t in demos {
                    cache
                        .entry(t.len())
                        .or_insert_with(|| Arc::new(QuadraticSensitivity::new(model, t.len())));
                }
                Ok(demos
                    .par_iter()
                    .map(|t| cache[&t.len()].derivatives(&traj_states_flat(t), &t.flat_actions()))
                    .collect())
            }
            FeatureSet::DrivingLongitudinal { .. } => demos
                .par_iter()
                .map(|t| self.derivatives(model, t, fd_step))
                .collect(),
        }
    }

    /// Derivatives at an arbitrary action sequence (used by the MPC solver).
    pub(crate) fn derivatives_at(
        &self,
        model: &DynamicsModel,
        x0: &[f64],
        u: &[f64],
        fd_step: f64,
        sens: Option<&QuadraticSensitivity>,
    ) -> FeatureDerivatives {
        match (self, sens) {
            (FeatureSet::LqrQuadratic, Some(s)) => s.derivatives(&model.rollout_flat(x0, u), u),
            (FeatureSet::LqrQuadratic, None) => {
                let s = QuadraticSensitivity::new(model, u.len() / model.action_dim());
                s.derivatives(&model.rollout_flat(x0, u), u)
            }
            _ => self.gauss_newton_derivatives(model, x0, u, fd_step),
        }
    }

    /// Per-sample residuals of the rollout of `actions`; each feature is the
    /// mean square of its residual vector.
    fn residuals_flat(&self, model: &DynamicsModel, x0: &[f64], actions: &[f64]) -> Vec<Vec<f64>> {
        let states = model.rollout_flat(x0, actions);
        match self {
            FeatureSet::LqrQuadratic => vec![states, actions.to_vec()],
            FeatureSet::DrivingLongitudinal { path, config } => {
                let s: Vec<f64> = states.iter().step_by(model.state_dim()).copied().collect();
                driving::driving_residuals_raw(&s, model.dt(), path, config).into()
            }
        }
    }

    /// Derivatives of `f_k = c_k |r_k|²` with residual Jacobians `J_k` from
    /// central differences: gradient `2 c_k J_kᵀ r_k` and Gauss-Newton
    /// Hessian `2 c_k J_kᵀ J_k`, which is positive semidefinite and exact
    /// whenever the residual is affine in the actions.
    fn gauss_newton_derivatives(&self, model: &DynamicsModel, x0: &[f64], u: &[f64], h: f64) -> FeatureDerivatives {
        let d = u.len();
        let r0 = self.residuals_flat(model, x0, u);
        let scale: Vec<f64> = match self {
            FeatureSet::LqrQuadratic => vec![1.0; r0.len()],
            FeatureSet::DrivingLongitudinal { .. } => r0.iter().map(|r| 1.0 / r.len() as f64).collect(),
        };
        let mut jac: Vec<DMatrix<f64>> = r0.iter().map(|r| DMatrix::zeros(r.len(), d)).collect();
        let mut w = u.to_vec();
        for i in 0..d {
            w[i] = u[i] + h;
            let rp = self.residuals_flat(model, x0, &w);
            w[i] = u[i] - h;
            let rm = self.residuals_flat(model, x0, &w);
            w[i] = u[i];
            for k in 0..r0.len() {
                for m in 0..r0[k].len() {
                    jac[k][(m, i)] = (rp[k][m] - rm[k][m]) / (2.0 * h);
                }
            }
        }
        let mut grads = Vec::with_capacity(r0.len());
        let mut hess = Vec::with_capacity(r0.len());
        for k in 0..r0.len() {
            let r = DVector::from_column_slice(&r0[k]);
            grads.push(jac[k].tr_mul(&r) * (2.0 * scale[k]));
            hess.push(jac[k].tr_mul(&jac[k]) * (2.0 * scale[k]));
        }
        FeatureDerivatives {
            gradients: grads,
            hessians: Arc::new(hess),
        }
    }

    /// Central finite differences of the rollout feature map.
    #[cfg(test)]
    fn fd_derivatives(&self, model: &DynamicsModel, x0: &[f64], u: &[f64], h: f64) -> FeatureDerivatives {
        let d = u.len();
        let fdim = self.dim();
        let f0 = self.evaluate_flat(model, x0, u);
        let mut grads = vec![DVector::zeros(d); fdim];
        let mut hess = vec![DMatrix::zeros(d, d); fdim];
        let mut w = u.to_vec();
        for i in 0..d {
            w[i] = u[i] + h;
            let fp = self.evaluate_flat(model, x0, &w);
            w[i] = u[i] - h;
            let fm = self.evaluate_flat(model, x0, &w);
            w[i] = u[i];
            for k in 0..fdim {
                grads[k][i] = (fp[k] - fm[k]) / (2.0 * h);
                hess[k][(i, i)] = (fp[k] - 2.0 * f0[k] + fm[k]) / (h * h);
            }
        }
        for i in 0..d {
            for j in 0..i {
                w[i] = u[i] + h;
                w[j] = u[j] + h;
                let fpp = self.evaluate_flat(model, x0, &w);
                w[j] = u[j] - h;
                let fpm = self.evaluate_flat(model, x0, &w);
                w[i] = u[i] - h;
                let fmm = self.evaluate_flat(model, x0, &w);
                w[j] = u[j] + h;
                let fmp = self.evaluate_flat(model, x0, &w);
                w[i] = u[i];
                w[j] = u[j];
                for k in 0..fdim {
                    let v = (fpp[k] - fpm[k] - fmp[k] + fmm[k]) / (4.0 * h * h);
                    hess[k][(i, j)] = v;
                    hess[k][(j, i)] = v;
                }
            }
        }
        FeatureDerivatives {
            gradients: grads,
            hessians: Arc::new(hess),
        }
    }
}

fn traj_states_flat(traj: &Trajectory) -> Vec<f64> {
    traj.states()
        .iter()
        .flat_map(|x| x.as_slice().iter().copied())
        .collect()
}

/// Sensitivity `Γ = ∂(x_0..x_{N-1}) / ∂(u_0..u_{N-1})` of a linear model,
/// and the constant Hessians of the two quadratic features.
#[derive(Debug)]
pub(crate) struct QuadraticSensitivity {
    gamma: DMatrix<f64>,
    hessians: Arc<Vec<DMatrix<f64>>>,
}

impl QuadraticSensitivity {
    pub(crate) fn new(model: &DynamicsModel, steps: usize) -> Self {
        let (a, b) = model.matrices();
        let n = model.state_dim();
        let m = model.action_dim();
        let mut gamma = DMatrix::zeros(n * steps, m * steps);
        // x_i depends on u_j (j < i) through A^{i-1-j} B
        for j in 0..steps {
            let mut block = b.clone();
            for i in j + 1..steps {
                gamma.view_mut((i * n, j * m), (n, m)).copy_from(&block);
                block = &a * block;
            }
        }
        let gtg = gamma.transpose() * &gamma * 2.0;
        let eye = DMatrix::identity(m * steps, m * steps) * 2.0;
        QuadraticSensitivity {
            gamma,
            hessians: Arc::new(vec![gtg, eye]),
        }
    }

    pub(crate) fn derivatives(&self, states: &[f64], actions: &[f64]) -> FeatureDerivatives {
        let x = DVector::from_column_slice(states);
        let g_state = self.gamma.tr_mul(&x) * 2.0;
        let g_effort = DVector::from_column_slice(actions) * 2.0;
        FeatureDerivatives {
            gradients: vec![g_state, g_effort],
            hessians: Arc::clone(&self.hessians),
        }
    }
}

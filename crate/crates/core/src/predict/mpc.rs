use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::features::{FeatureSet, QuadraticSensitivity};
use crate::types::{CostWeights, State, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MpcInit {
    #[default]
    Zero,
    /// Flattened warm-start actions; shorter sequences are padded with zeros.
    Actions(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcConfig {
    pub horizon: usize,
    pub max_iters: usize,
    /// Stop once `‖∇J‖∞ ≤ grad_tol`.
    pub grad_tol: f64,
    /// Optional `[min, max]` per action component.
    pub action_bounds: Option<Vec<[f64; 2]>>,
    pub init: MpcInit,
    /// Step for finite-difference derivatives of non-quadratic features.
    pub fd_step: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            horizon: 30,
            max_iters: 100,
            grad_tol: 1e-8,
            action_bounds: None,
            init: MpcInit::Zero,
            fd_step: 1e-4,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self, model: &DynamicsModel) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("MPC horizon must be at least 1"));
        }
        if !(self.grad_tol >= 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::invalid("grad_tol must be nonnegative and fd_step positive"));
        }
        if let Some(b) = &self.action_bounds {
            if b.len() != model.action_dim() {
                return Err(Error::dims("action bounds", model.action_dim(), b.len()));
            }
            if b.iter().any(|[lo, hi]| !(lo <= hi)) {
                return Err(Error::invalid("action bounds need min <= max"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    pub trajectory: Trajectory,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

struct Objective<'a> {
    theta: &'a [f64],
    fs: &'a FeatureSet,
    model: &'a DynamicsModel,
    x0: &'a [f64],
    fd_step: f64,
    sens: Option<QuadraticSensitivity>,
}

impl Objective<'_> {
    fn cost(&self, u: &[f64]) -> f64 {
        self.fs
            .evaluate_flat(self.model, self.x0, u)
            .iter()
            .zip(self.theta)
            .map(|(f, t)| f * t)
            .sum()
    }

    fn derivatives(&self, u: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.fs.derivatives_at(self.model, self.x0, u, self.fd_step, self.sens.as_ref());
        let n = u.len();
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for (k, t) in self.theta.iter().enumerate() {
            if *t == 0.0 {
                continue;
            }
            g.axpy(*t, &d.gradients[k], 1.0);
            h += &d.hessians[k] * *t;
        }
        (g, h)
    }
}

fn clamp(u: &mut [f64], bounds: Option<&Vec<[f64; 2]>>) {
    if let Some(b) = bounds {
        let m = b.len();
        for (i, v) in u.iter_mut().enumerate() {
            let [lo, hi] = b[i % m];
            *v = v.clamp(lo, hi);
        }
    }
}

/// Minimizes `θᵀf(ξ)` over the action sequence of a `horizon`-step
/// rollout from `x0` by damped Newton steps with backtracking.
pub fn mpc_solve(
    theta: &CostWeights,
    fs: &FeatureSet,
    model: &DynamicsModel,
    x0: &State,
    cfg: &MpcConfig,
) -> Result<MpcSolution> {
    cfg.validate(model)?;
    fs.validate()?;
    if theta.dim() != fs.dim() {
        return Err(Error::dims("cost weights", fs.dim(), theta.dim()));
    }
    if x0.dim() != model.state_dim() {
        return Err(Error::dims("initial state", model.state_dim(), x0.dim()));
    }
    if cfg.horizon < fs.min_length() {
        return Err(Error::TooShort {
            context: "MPC horizon".into(),
            needed: fs.min_length(),
            found: cfg.horizon,
        });
    }
    let n = cfg.horizon * model.action_dim();
    let sens = matches!(fs, FeatureSet::LqrQuadratic).then(|| QuadraticSensitivity::new(model, cfg.horizon));
    let obj = Objective {
        theta: theta.as_slice(),
        fs,
        model,
        x0: x0.as_slice(),
        fd_step: cfg.fd_step,
        sens,
    };
    let bounds = cfg.action_bounds.as_ref();

    let mut u = vec![0.0; n];
    if let MpcInit::Actions(w) = &cfg.init {
        for (a, b) in u.iter_mut().zip(w) {
            *a = *b;
        }
    }
    clamp(&mut u, bounds);
    let mut cost = obj.cost(&u);
    if !cost.is_finite() {
        return Err(Error::Numerical("MPC cost is not finite at the initial actions".into()));
    }
    let mut converged = false;
    let mut iterations = 0;
    let mut gnorm = f64::INFINITY;
    let mut damping = 0.0f64;

    while iterations < cfg.max_iters {
        let (g, h) = obj.derivatives(&u);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("MPC gradient is not finite".into()));
        }
        gnorm = projected_gradient_norm(&u, &g, bounds);
        if gnorm <= cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let scale = h.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let mut mu = (damping * 0.1).max(0.0);
        let step = loop {
            let mut hd = h.clone();
            for i in 0..n {
                hd[(i, i)] += mu;
            }
            if let Some(c) = Cholesky::new(hd) {
                break c.solve(&(-&g));
            }
            mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
            if mu > 1e12 * scale {
                break -&g / scale;
            }
        };
        damping = mu;

        let slope = g.dot(&step);
        let dir = if slope < 0.0 { step } else { -&g / scale };
        let slope = g.dot(&dir).min(0.0);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let mut cand: Vec<f64> = u.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
            clamp(&mut cand, bounds);
            let c = obj.cost(&cand);
            if !c.is_finite() {
                return Err(Error::Numerical("MPC cost became non-finite".into()));
            }
            if c <= cost + 1e-4 * t * slope || (c <= cost && bounds.is_some()) {
                u = cand;
                cost = c;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let trajectory = model.trajectory_from_flat(x0.as_slice(), &u)?;
    Ok(MpcSolution {
        trajectory,
        cost,
        converged,
        iterations,
        gradient_norm: gnorm,
    })
}

/// Components of the gradient that a step could still reduce, given bounds.
fn projected_gradient_norm(u: &[f64], g: &DVector<f64>, bounds: Option<&Vec<[f64; 2]>>) -> f64 {
    let mut worst = 0.0f64;
    for (i, gi) in g.iter().enumerate() {
        let blocked = bounds.is_some_and(|b| {
            let [lo, hi] = b[i % b.len()];
            (u[i] <= lo && *gi > 0.0) || (u[i] >= hi && *gi < 0.0)
        });
        if !blocked {
            worst = worst.max(gi.abs());
        }
    }
    worst
}

/// The predicted trajectory of [`mpc_solve`].
pub fn mpc_predict(
    theta: &CostWeights,
    fs: &FeatureSet,
    model: &DynamicsModel,
    x0: &State,
    cfg: &MpcConfig,
) -> Result<Trajectory> {
    mpc_solve(theta, fs, model, x0, cfg).map(|s| s.trajectory)
}

//! Continuous maximum-entropy IRL with a Laplace approximation of the
//! partition function, fitted over the weight simplex.

mod laplace;
mod simplex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use laplace::LaplaceProblem;
pub use simplex::{minimize_on_simplex, project_to_simplex, SimplexOptions, SimplexSolution};

use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::types::{CostWeights, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlConfig {
    /// Rationality: demonstrations are modelled as `∝ exp(−β θᵀf)`.
    pub beta: f64,
    /// Ridge added to every feature Hessian, relative to its mean diagonal.
    pub hessian_reg: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub n_restarts: usize,
    /// Step for finite-difference feature derivatives.
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for IrlConfig {
    fn default() -> Self {
        IrlConfig {
            beta: 1.0,
            hessian_reg: 1e-6,
            max_iters: 500,
            grad_tol: 1e-9,
            n_restarts: 3,
            fd_step: 1e-3,
            seed: 0,
        }
    }
}

impl IrlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta must be positive"));
        }
        if !(self.hessian_reg >= 0.0 && self.hessian_reg.is_finite()) {
            return Err(Error::invalid("hessian_reg must be nonnegative"));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::invalid("grad_tol must be nonnegative"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::invalid("fd_step must be positive"));
        }
        if self.n_restarts == 0 {
            return Err(Error::invalid("n_restarts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlResult {
    pub theta: CostWeights,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `θᵀ f(ξ)`.
pub fn trajectory_cost(traj: &Trajectory, features: &FeatureSet, theta: &CostWeights) -> Result<f64> {
    let f = features.evaluate(traj)?;
    if f.dim() != theta.dim() {
        return Err(Error::dims("cost weights", f.dim(), theta.dim()));
    }
    Ok(f.dot(theta.as_slice()))
}

/// Negative log-likelihood of `demos` at `theta`, up to a constant.
pub fn laplace_objective(
    theta: &CostWeights,
    demos: &[&Trajectory],
    features: &FeatureSet,
    model: &DynamicsModel,
    config: &IrlConfig,
) -> Result<f64> {
    prepare(demos, features, model, config)?.value(theta.as_slice())
}

/// Derivatives of every demonstration, assembled into the objective.
pub fn prepare(
    demos: &[&Trajectory],
    features: &FeatureSet,
    model: &DynamicsModel,
    config: &IrlConfig,
) -> Result<LaplaceProblem> {
    config.validate()?;
    features.validate()?;
    if demos.is_empty() {
        return Err(Error::invalid("no demonstrations"));
    }
    let derivs = features.derivatives_batch(model, demos, config.fd_step)?;
    LaplaceProblem::new(&derivs, config.beta, config.hessian_reg)
}

/// Weights minimizing the Laplace objective over the simplex.
pub fn fit(
    demos: &[&Trajectory],
    features: &FeatureSet,
    model: &DynamicsModel,
    config: &IrlConfig,
) -> Result<IrlResult> {
    let problem = prepare(demos, features, model, config)?;
    fit_prepared(&problem, config)
}

/// Best of `n_restarts` projected-gradient runs. The first run starts at
/// the simplex centroid, the rest at seeded uniform Dirichlet draws.
pub fn fit_prepared(problem: &LaplaceProblem, config: &IrlConfig) -> Result<IrlResult> {
    config.validate()?;
    let dim = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let opts = SimplexOptions {
        max_iters: config.max_iters,
        tol: config.grad_tol,
    };
    let mut best: Option<SimplexSolution> = None;
    let mut last_err = None;
    for restart in 0..config.n_restarts {
        let start: Vec<f64> = if restart == 0 {
            vec![1.0 / dim as f64; dim]
        } else {
            let e: Vec<f64> = (0..dim).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        };
        match minimize_on_simplex(|t| problem.value_and_gradient(t), &start, opts) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.value < b.value) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let sol = match best {
        Some(s) => s,
        None => return Err(last_err.unwrap_or_else(|| Error::Numerical("no restart succeeded".into()))),
    };
    Ok(IrlResult {
        theta: CostWeights::new(sol.x)?,
        objective: sol.value,
        converged: sol.converged,
        iterations: sol.iterations,
    })
}

//! Laplace-approximated negative log-likelihood of demonstrations under a
//! linear cost `β θᵀf(ξ)`.
//!
//! Around each demonstration the cost is expanded to second order in the
//! actions, `g = β Σ θ_k ∇f_k` and `H = β Σ θ_k (∇²f_k + εI)`, giving the
//! per-demonstration term `½ gᵀH⁻¹g − ½ log det H`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureDerivatives;

#[derive(Debug)]
struct Group {
    hessians: Vec<DMatrix<f64>>,
    gradients: Vec<Vec<DVector<f64>>>,
    pencil: Option<Pencil>,
}

/// Simultaneous diagonalization of two regularized Hessians:
/// `Tᵀ H₁ T = I`, `Tᵀ H₀ T = diag(λ)`.
#[derive(Debug)]
struct Pencil {
    lambda: DVector<f64>,
    logdet_base: f64,
    /// `[Tᵀ∇f₀, Tᵀ∇f₁]` per demonstration.
    projected: Vec<[DVector<f64>; 2]>,
}

#[derive(Debug)]
pub struct LaplaceProblem {
    beta: f64,
    dim: usize,
    n_demos: usize,
    groups: Vec<Group>,
}

fn regularize(hessians: &[DMatrix<f64>], rel: f64) -> Vec<DMatrix<f64>> {
    let d = hessians[0].nrows();
    let scale = hessians
        .iter()
        .map(|h| h.trace() / d as f64)
        .fold(0.0, f64::max);
    let eps = if scale > 0.0 { rel * scale } else { rel };
    hessians
        .iter()
        .map(|h| {
            let mut h = (h + h.transpose()) * 0.5;
            for i in 0..d {
                h[(i, i)] += eps;
            }
            h
        })
        .collect()
}

fn build_pencil(hessians: &[DMatrix<f64>], gradients: &[Vec<DVector<f64>>]) -> Option<Pencil> {
    if hessians.len() != 2 {
        return None;
    }
    let chol = Cholesky::new(hessians[1].clone())?;
    let l = chol.l();
    let logdet_base = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    // M = L⁻¹ H₀ L⁻ᵀ
    let linv_h0 = l.solve_lower_triangular(&hessians[0])?;
    let m = l.solve_lower_triangular(&linv_h0.transpose())?;
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    // T = L⁻ᵀ V
    let t = l.transpose().solve_upper_triangular(&eig.eigenvectors)?;
    let projected = gradients
        .iter()
        .map(|g| [t.tr_mul(&g[0]), t.tr_mul(&g[1])])
        .collect();
    Some(Pencil {
        lambda: eig.eigenvalues,
        logdet_base,
        projected,
    })
}

impl LaplaceProblem {
    /// Builds the objective from per-demonstration feature derivatives.
    /// `hessian_reg` is the ridge relative to the mean Hessian diagonal.
    pub fn new(derivs: &[FeatureDerivatives], beta: f64, hessian_reg: f64) -> Result<Self> {
        if derivs.is_empty() {
            return Err(Error::invalid("no demonstrations"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta must be positive"));
        }
        if !(hessian_reg >= 0.0 && hessian_reg.is_finite()) {
            return Err(Error::invalid("hessian_reg must be nonnegative"));
        }
        let dim = derivs[0].gradients.len();
        if dim == 0 {
            return Err(Error::invalid("empty feature set"));
        }
        for d in derivs {
            if d.gradients.len() != dim || d.hessians.len() != dim {
                return Err(Error::dims("feature derivatives", dim, d.gradients.len()));
            }
            let all_finite = d.gradients.iter().all(|g| g.iter().all(|v| v.is_finite()))
                && d.hessians.iter().all(|h| h.iter().all(|v| v.is_finite()));
            if !all_finite {
                return Err(Error::NonFinite("feature derivatives".into()));
            }
        }
        let informative = derivs
            .iter()
            .any(|d| d.gradients.iter().any(|g| g.amax() > 1e-12));
        if !informative {
            return Err(Error::Degenerate(
                "all feature gradients vanish; the demonstrations carry no information about the weights".into(),
            ));
        }

        let mut keys: Vec<*const Vec<DMatrix<f64>>> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (i, d) in derivs.iter().enumerate() {
            let key = Arc::as_ptr(&d.hessians);
            match keys.iter().position(|k| *k == key) {
                Some(g) => members[g].push(i),
                None => {
                    keys.push(key);
                    members.push(vec![i]);
                }
            }
        }
        let groups = members
            .par_iter()
            .map(|idx| {
                let hessians = regularize(&derivs[idx[0]].hessians, hessian_reg);
                let gradients: Vec<Vec<DVector<f64>>> =
                    idx.iter().map(|&i| derivs[i].gradients.clone()).collect();
                let pencil = build_pencil(&hessians, &gradients);
                Group {
                    hessians,
                    gradients,
                    pencil,
                }
            })
            .collect();
        Ok(LaplaceProblem {
            beta,
            dim,
            n_demos: derivs.len(),
            groups,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_demos(&self) -> usize {
        self.n_demos
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::dims("theta", self.dim, theta.len()));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("theta".into()));
        }
        Ok(())
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.value_and_gradient(theta).map(|(v, _)| v)
    }

    /// Objective and its gradient in `θ`. Groups with two features use the
    /// eigen-decomposed pencil; everything else factors `H` directly.
    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluate(theta, true)
    }

    /// Same quantity, always through a Cholesky factorization of `H`.
    pub fn value_and_gradient_general(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluate(theta, false)
    }

    fn evaluate(&self, theta: &[f64], fast: bool) -> Result<(f64, Vec<f64>)> {
        self.check_theta(theta)?;
        let parts: Vec<Result<(f64, Vec<f64>)>> = self
            .groups
            .par_iter()
            .map(|g| match (&g.pencil, fast) {
                (Some(p), true) => self.pencil_terms(p, theta),
                _ => self.cholesky_terms(g, theta),
            })
            .collect();
        let mut value = 0.0;
        let mut grad = vec![0.0; self.dim];
        for part in parts {
            let (v, gr) = part?;
            value += v;
            for (a, b) in grad.iter_mut().zip(gr) {
                *a += b;
            }
        }
        if !value.is_finite() {
            return Err(Error::Numerical("Laplace objective is not finite".into()));
        }
        Ok((value, grad))
    }

    fn pencil_terms(&self, p: &Pencil, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let b = self.beta;
        let diag: Vec<f64> = p.lambda.iter().map(|l| b * (theta[0] * l + theta[1])).collect();
        if diag.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NotPositiveDefinite("cost Hessian at these weights".into()));
        }
        let logdet = diag.iter().map(|v| v.ln()).sum::<f64>() + p.logdet_base;
        // ∂(log det H)/∂θ = Σ β λ_i / D_i, Σ β / D_i
        let trace0: f64 = p.lambda.iter().zip(&diag).map(|(l, d)| b * l / d).sum();
        let trace1: f64 = diag.iter().map(|d| b / d).sum();
        let n = p.projected.len() as f64;
        let mut value = -0.5 * n * logdet;
        let mut grad = vec![-0.5 * n * trace0, -0.5 * n * trace1];
        for [a0, a1] in &p.projected {
            for i in 0..diag.len() {
                let c = b * (theta[0] * a0[i] + theta[1] * a1[i]);
                let y = c / diag[i];
                value += 0.5 * c * y;
                grad[0] += b * a0[i] * y - 0.5 * y * y * b * p.lambda[i];
                grad[1] += b * a1[i] * y - 0.5 * y * y * b;
            }
        }
        Ok((value, grad))
    }

    fn cholesky_terms(&self, g: &Group, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let b = self.beta;
        let d = g.hessians[0].nrows();
        let mut h = DMatrix::zeros(d, d);
        for (t, hk) in theta.iter().zip(&g.hessians) {
            h += hk * (b * t);
        }
        let chol = Cholesky::new(h)
            .ok_or_else(|| Error::NotPositiveDefinite("cost Hessian at these weights".into()))?;
        let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let hinv = chol.inverse();
        let n = g.gradients.len() as f64;
        let mut value = -0.5 * n * logdet;
        let mut grad: Vec<f64> = g
            .hessians
            .iter()
            .map(|hk| -0.5 * n * b * hinv.component_mul(hk).sum())
            .collect();
        for grads in &g.gradients {
            let mut gt = DVector::zeros(d);
            for (t, gk) in theta.iter().zip(grads) {
                gt += gk * (b * t);
            }
            let y = chol.solve(&gt);
            value += 0.5 * gt.dot(&y);
            for k in 0..self.dim {
                grad[k] += b * grads[k].dot(&y) - 0.5 * b * y.dot(&(&g.hessians[k] * &y));
            }
        }
        Ok((value, grad))
    }
}

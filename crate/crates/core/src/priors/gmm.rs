//! Full-covariance Gaussian mixtures fitted by expectation maximization.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmConfig {
    /// Relative log-likelihood change that stops EM.
    pub tol: f64,
    pub max_iter: usize,
    /// Ridge added to every covariance in each M-step.
    pub cov_reg: f64,
    pub n_restarts: usize,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            tol: 1e-6,
            max_iter: 300,
            cov_reg: 1e-6,
            n_restarts: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGmm {
    weights: Vec<f64>,
    means: Vec<FeatureVector>,
    covariances: Vec<Vec<Vec<f64>>>,
}

/// Mixture weights, means and positive-definite covariances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawGmm", into = "RawGmm")]
pub struct GmmModel {
    weights: Vec<f64>,
    means: Vec<FeatureVector>,
    covariances: Vec<DMatrix<f64>>,
    factors: Vec<Cholesky<f64, Dyn>>,
    log_norm: Vec<f64>,
}

impl PartialEq for GmmModel {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.means == other.means && self.covariances == other.covariances
    }
}

impl TryFrom<RawGmm> for GmmModel {
    type Error = Error;
    fn try_from(raw: RawGmm) -> Result<Self> {
        let covs = raw
            .covariances
            .iter()
            .map(|rows| {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::invalid("covariance must be square"));
                }
                Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        GmmModel::new(raw.weights, raw.means, covs)
    }
}

impl From<GmmModel> for RawGmm {
    fn from(m: GmmModel) -> Self {
        RawGmm {
            weights: m.weights,
            means: m.means,
            covariances: m
                .covariances
                .iter()
                .map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
        }
    }
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, means: Vec<FeatureVector>, covariances: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        if means.len() != k || covariances.len() != k {
            return Err(Error::dims("mixture components", k, means.len().min(covariances.len())));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("mixture weights must be positive"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("mixture weights must sum to one"));
        }
        let dim = means[0].dim();
        let mut factors = Vec::with_capacity(k);
        let mut log_norm = Vec::with_capacity(k);
        for (j, (m, c)) in means.iter().zip(&covariances).enumerate() {
            if m.dim() != dim {
                return Err(Error::dims("mixture mean", dim, m.dim()));
            }
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::dims("mixture covariance", dim, c.nrows()));
            }
            let chol = Cholesky::new(c.clone())
                .ok_or_else(|| Error::NotPositiveDefinite(format!("covariance of component {j}")))?;
            let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            log_norm.push(-0.5 * (dim as f64 * (2.0 * std::f64::consts::PI).ln() + logdet));
            factors.push(chol);
        }
        Ok(GmmModel {
            weights,
            means,
            covariances,
            factors,
            log_norm,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[FeatureVector] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    /// `log N(x; μ_j, Σ_j)`.
    pub fn log_density(&self, j: usize, x: &[f64]) -> f64 {
        let diff = DVector::from_iterator(
            x.len(),
            x.iter().zip(self.means[j].as_slice()).map(|(a, b)| a - b),
        );
        let z = self.factors[j]
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        self.log_norm[j] - 0.5 * z.norm_squared()
    }

    fn scores_with(&self, weights: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.k()).map(|j| weights[j].ln() + self.log_density(j, x)).collect()
    }

    /// Posterior component probabilities of one point.
    pub fn responsibilities(&self, f: &FeatureVector) -> Vec<f64> {
        let scores = self.scores_with(&self.weights, f.as_slice());
        let lse = log_sum_exp(&scores);
        scores.iter().map(|s| (s - lse).exp()).collect()
    }

    /// Mean log-likelihood per point.
    pub fn log_likelihood(&self, features: &[FeatureVector]) -> f64 {
        let total: f64 = features
            .iter()
            .map(|f| log_sum_exp(&self.scores_with(&self.weights, f.as_slice())))
            .sum();
        total / features.len() as f64
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (j, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = j;
        }
    }
    best
}

/// Index of the component maximizing `ω_j · N(f; μ_j, Σ_j)`, lowest index on ties.
pub fn gmm_assign(model: &GmmModel, f: &FeatureVector) -> usize {
    argmax_first(&model.scores_with(&model.weights, f.as_slice()))
}

/// A fitted mixture with the per-iteration mean log-likelihood of the
/// winning restart.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GmmModel,
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
    /// Components reseeded after collapsing to no points.
    pub reseeded: usize,
}

/// EM for a `k`-component mixture; best of the configured restarts.
pub fn gmm_fit(
    features: &[FeatureVector],
    k: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
    cov_reg: f64,
) -> Result<GmmModel> {
    let cfg = GmmConfig {
        tol,
        max_iter,
        cov_reg,
        ..GmmConfig::default()
    };
    gmm_fit_traced(features, k, seed, &cfg).map(|f| f.model)
}

pub fn gmm_fit_traced(features: &[FeatureVector], k: usize, seed: u64, cfg: &GmmConfig) -> Result<GmmFit> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > features.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the number of feature vectors ({})",
            features.len()
        )));
    }
    if !(cfg.cov_reg >= 0.0) || cfg.n_restarts == 0 {
        return Err(Error::invalid("cov_reg must be nonnegative and n_restarts positive"));
    }
    let dim = features[0].dim();
    if let Some(f) = features.iter().find(|f| f.dim() != dim) {
        return Err(Error::dims("feature vector", dim, f.dim()));
    }
    let x: Vec<&[f64]> = features.iter().map(|f| f.as_slice()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<GmmFit> = None;
    let mut last_err = None;
    for _ in 0..cfg.n_restarts {
        let centers = kmeans_pp(&x, k, &mut rng);
        match run_em(&x, centers, cfg) {
            Ok(fit) => {
                let ll = *fit.log_likelihood_trace.last().unwrap();
                if best
                    .as_ref()
                    .is_none_or(|b| ll > *b.log_likelihood_trace.last().unwrap())
                {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Numerical("EM failed".into())))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn kmeans_pp(x: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut centers = vec![x[rng.random_range(0..n)].to_vec()];
    let mut d2: Vec<f64> = x.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if r < *d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(x[pick].to_vec());
        for (i, p) in x.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

/// Weighted mean and covariance (+ ridge) from responsibilities `r`.
fn m_step(x: &[&[f64]], resp: &[Vec<f64>], k: usize, reg: f64) -> (Vec<f64>, Vec<Vec<f64>>, Vec<DMatrix<f64>>) {
    let dim = x[0].len();
    let n = x.len();
    let mut nk = vec![0.0; k];
    let mut means = vec![vec![0.0; dim]; k];
    for (p, r) in x.iter().zip(resp) {
        for j in 0..k {
            nk[j] += r[j];
            for d in 0..dim {
                means[j][d] += r[j] * p[d];
            }
        }
    }
    for (m, &n) in means.iter_mut().zip(&nk) {
        if n > 0.0 {
            m.iter_mut().for_each(|v| *v /= n);
        }
    }
    let mut covs = vec![DMatrix::zeros(dim, dim); k];
    for (p, r) in x.iter().zip(resp) {
        for j in 0..k {
            if r[j] == 0.0 {
                continue;
            }
            for a in 0..dim {
                let da = p[a] - means[j][a];
                for b in 0..=a {
                    covs[j][(a, b)] += r[j] * da * (p[b] - means[j][b]);
                }
            }
        }
    }
    for j in 0..k {
        let c = &mut covs[j];
        for a in 0..dim {
            for b in 0..a {
                c[(b, a)] = c[(a, b)];
            }
        }
        if nk[j] > 0.0 {
            *c /= nk[j];
        }
        for a in 0..dim {
            c[(a, a)] += reg;
        }
    }
    let weights = nk.iter().map(|v| v / n as f64).collect();
    (weights, means, covs)
}

fn global_covariance(x: &[&[f64]], reg: f64) -> DMatrix<f64> {
    let ones = vec![vec![1.0]; x.len()];
    let (_, _, mut c) = m_step(x, &ones, 1, reg);
    let c = c.remove(0);
    let floor = c.diagonal().iter().fold(0.0f64, |m, v| m.max(*v)) * 1e-9 + 1e-12;
    c + DMatrix::identity(x[0].len(), x[0].len()) * floor
}

fn run_em(x: &[&[f64]], centers: Vec<Vec<f64>>, cfg: &GmmConfig) -> Result<GmmFit> {
    let k = centers.len();
    let n = x.len();
    let min_mass = 1e-8;
    // initial responsibilities: hard assignment to the nearest seed
    let mut resp: Vec<Vec<f64>> = x
        .iter()
        .map(|p| {
            let d: Vec<f64> = centers.iter().map(|c| -sq_dist(p, c)).collect();
            let mut r = vec![0.0; k];
            r[argmax_first(&d)] = 1.0;
            r
        })
        .collect();
    let mut trace = Vec::new();
    let mut reseeded = 0;
    let mut converged = false;
    let mut model = None;
    for _ in 0..cfg.max_iter.max(1) {
        let (mut weights, mut means, mut covs) = m_step(x, &resp, k, cfg.cov_reg);
        for j in 0..k {
            if weights[j] * n as f64 >= min_mass {
                continue;
            }
            // reseed at the point farthest from every surviving mean
            let far = (0..n)
                .max_by(|&a, &b| {
                    let da = nearest(x[a], &means, &weights, min_mass / n as f64);
                    let db = nearest(x[b], &means, &weights, min_mass / n as f64);
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .unwrap();
            means[j] = x[far].to_vec();
            covs[j] = global_covariance(x, cfg.cov_reg);
            weights[j] = 1.0 / n as f64;
            reseeded += 1;
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let means_fv = means
            .into_iter()
            .map(FeatureVector::new)
            .collect::<Result<Vec<_>>>()?;
        let m = GmmModel::new(weights, means_fv, covs)?;

        let mut ll = 0.0;
        for (p, r) in x.iter().zip(resp.iter_mut()) {
            let scores = m.scores_with(&m.weights, p);
            let lse = log_sum_exp(&scores);
            ll += lse;
            for j in 0..k {
                r[j] = (scores[j] - lse).exp();
            }
        }
        let ll = ll / n as f64;
        if !ll.is_finite() {
            return Err(Error::Numerical("mixture log-likelihood is not finite".into()));
        }
        let prev = trace.last().copied();
        trace.push(ll);
        model = Some(m);
        if let Some(prev) = prev {
            if (ll - prev).abs() <= cfg.tol * prev.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }
    Ok(GmmFit {
        model: model.expect("at least one EM iteration"),
        log_likelihood_trace: trace,
        converged,
        reseeded,
    })
}

fn nearest(p: &[f64], means: &[Vec<f64>], weights: &[f64], alive: f64) -> f64 {
    means
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w >= alive)
        .map(|(m, _)| sq_dist(p, m))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(centers: &[[f64; 2]], sigma: f64, per: usize, seed: u64) -> (Vec<FeatureVector>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut out = Vec::new();
        let mut labels = Vec::new();
        for (j, c) in centers.iter().enumerate() {
            for _ in 0..per {
                out.push(
                    FeatureVector::new(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]).unwrap(),
                );
                labels.push(j);
            }
        }
        (out, labels)
    }

    #[test]
    fn separated_blobs_recover_means() {
        let centers = [[0.0, 0.0], [10.0, 0.0]];
        let (f, _) = blobs(&centers, 1.0, 400, 3);
        let m = gmm_fit(&f, 2, 1, 1e-8, 500, 1e-6).unwrap();
        for c in centers {
            let closest = m
                .means()
                .iter()
                .map(|mu| sq_dist(mu.as_slice(), &c).sqrt())
                .fold(f64::INFINITY, f64::min);
            // sampling error of a 400-point mean is ≈ 0.05σ
            assert!(closest < 0.15, "mean error {closest}");
        }
    }

    #[test]
    fn single_component_is_sample_moments() {
        let (f, _) = blobs(&[[1.0, -2.0]], 0.7, 50, 9);
        let m = gmm_fit(&f, 1, 0, 1e-10, 50, 1e-6).unwrap();
        let n = f.len() as f64;
        let mean: Vec<f64> = (0..2).map(|d| f.iter().map(|v| v.as_slice()[d]).sum::<f64>() / n).collect();
        for d in 0..2 {
            assert!((m.means()[0].as_slice()[d] - mean[d]).abs() < 1e-12);
        }
        for a in 0..2 {
            for b in 0..2 {
                let c: f64 = f
                    .iter()
                    .map(|v| (v.as_slice()[a] - mean[a]) * (v.as_slice()[b] - mean[b]))
                    .sum::<f64>()
                    / n;
                let expect = c + if a == b { 1e-6 } else { 0.0 };
                assert!((m.covariances()[0][(a, b)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_likelihood_never_decreases() {
        let (f, _) = blobs(&[[0.0, 0.0], [3.0, 1.0], [1.0, 4.0]], 1.0, 100, 5);
        for seed in 0..5 {
            let fit = gmm_fit_traced(&f, 3, seed, &GmmConfig { tol: 0.0, max_iter: 60, ..GmmConfig::default() }).unwrap();
            for w in fit.log_likelihood_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn assign_examples() {
        let eye = DMatrix::identity(2, 2);
        let m = GmmModel::new(
            vec![0.5, 0.5],
            vec![FeatureVector::new(vec![-1.0, 0.0]).unwrap(), FeatureVector::new(vec![1.0, 0.0]).unwrap()],
            vec![eye.clone(), eye],
        )
        .unwrap();
        assert_eq!(gmm_assign(&m, &FeatureVector::new(vec![1.0, 0.0]).unwrap()), 1);
        assert_eq!(gmm_assign(&m, &FeatureVector::new(vec![0.0, 0.0]).unwrap()), 0);
        assert_eq!(gmm_assign(&m, &FeatureVector::new(vec![-3.0, 2.0]).unwrap()), 0);
    }

    #[test]
    fn assignment_ignores_common_weight_scale() {
        let (f, _) = blobs(&[[0.0, 0.0], [2.0, 2.0]], 1.0, 60, 2);
        let m = gmm_fit(&f, 2, 4, 1e-6, 100, 1e-6).unwrap();
        let scaled: Vec<f64> = m.weights().iter().map(|w| w * 37.5).collect();
        for p in &f {
            assert_eq!(gmm_assign(&m, p), argmax_first(&m.scores_with(&scaled, p.as_slice())));
        }
    }

    #[test]
    fn blob_assignments_match_labels() {
        let (f, labels) = blobs(&[[0.0, 0.0], [6.0, 6.0]], 1.0, 200, 8);
        let m = gmm_fit(&f, 2, 2, 1e-6, 200, 1e-6).unwrap();
        let assigned: Vec<usize> = f.iter().map(|p| gmm_assign(&m, p)).collect();
        let agree = assigned.iter().zip(&labels).filter(|(a, b)| a == b).count();
        let acc = agree.max(f.len() - agree) as f64 / f.len() as f64;
        assert!(acc > 0.99, "accuracy {acc}");
    }

    #[test]
    fn too_many_components_errors() {
        let (f, _) = blobs(&[[0.0, 0.0]], 1.0, 3, 1);
        assert!(gmm_fit(&f, 4, 0, 1e-6, 10, 1e-6).is_err());
    }

    #[test]
    fn deterministic_and_serde_round_trip() {
        let (f, _) = blobs(&[[0.0, 0.0], [4.0, 0.0]], 1.0, 80, 6);
        let a = gmm_fit(&f, 2, 13, 1e-6, 100, 1e-6).unwrap();
        let b = gmm_fit(&f, 2, 13, 1e-6, 100, 1e-6).unwrap();
        assert_eq!(a, b);
        let back: GmmModel = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, back);
    }
}

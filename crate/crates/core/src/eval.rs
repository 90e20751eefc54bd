//! Prediction accuracy: mean Euclidean distance between predicted and
//! recorded positions, the method comparison and the neighbour-count sweep.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::irl::IrlConfig;
use crate::predict::{predict_rollout, MpcConfig, OnlineConfig};
use crate::priors::{fit_pirl_gmm, fit_pirl_knn, fit_tirl, PriorOptions, StyleModel, StyleVariant};
use crate::types::{CostWeights, Trajectory};

/// Time-averaged Euclidean distance between the position components of two
/// trajectories, over their common prefix.
pub fn med_with(ground: &Trajectory, predicted: &Trajectory, components: &[usize]) -> Result<f64> {
    let n = ground.len().min(predicted.len());
    if n == 0 || components.is_empty() {
        return Err(Error::invalid("no overlap to compare"));
    }
    if ground.state_dim() != predicted.state_dim() {
        return Err(Error::dims("compared state", ground.state_dim(), predicted.state_dim()));
    }
    if let Some(c) = components.iter().find(|c| **c >= ground.state_dim()) {
        return Err(Error::invalid(format!("position component {c} out of range")));
    }
    let total: f64 = ground.states()[..n]
        .iter()
        .zip(&predicted.states()[..n])
        .map(|(g, p)| {
            components
                .iter()
                .map(|&c| (g.as_slice()[c] - p.as_slice()[c]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    Ok(total / n as f64)
}

/// [`med_with`] on the position (first) state component.
pub fn med(ground: &Trajectory, predicted: &Trajectory) -> Result<f64> {
    med_with(ground, predicted, &[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Tirl,
    PirlGmm { k: usize },
    PirlKnn { k: usize },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Tirl => write!(f, "TIRL"),
            Method::PirlGmm { k } => write!(f, "PIRL-GMM(k={k})"),
            Method::PirlKnn { k } => write!(f, "PIRL-kNN(k={k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub irl: IrlConfig,
    pub online: OnlineConfig,
    /// Solver settings; the horizon is replaced per test trajectory by the
    /// number of steps after the observation window.
    pub mpc_max_iters: usize,
    pub mpc_grad_tol: f64,
    pub mpc_fd_step: f64,
    pub prior: PriorOptions,
    /// Seed of the mixture fit.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let mpc = MpcConfig::default();
        EvalConfig {
            irl: IrlConfig { beta: 100.0, ..IrlConfig::default() },
            online: OnlineConfig::default(),
            mpc_max_iters: mpc.max_iters,
            mpc_grad_tol: mpc.grad_tol,
            mpc_fd_step: mpc.fd_step,
            prior: PriorOptions::default(),
            seed: 0,
        }
    }
}

impl EvalConfig {
    fn mpc(&self, horizon: usize) -> MpcConfig {
        MpcConfig {
            horizon,
            max_iters: self.mpc_max_iters,
            grad_tol: self.mpc_grad_tol,
            fd_step: self.mpc_fd_step,
            ..MpcConfig::default()
        }
    }

    /// Prior options whose feature window matches the observation window.
    fn prior(&self) -> PriorOptions {
        PriorOptions {
            feature_window: self.prior.feature_window.map(|_| self.online.t_prime),
            ..self.prior
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub label: String,
    #[serde(with = "crate::io::nullable")]
    pub med_mean: f64,
    #[serde(with = "crate::io::nullable")]
    pub med_std: f64,
    /// Dataset indices of the successfully evaluated test trajectories,
    /// aligned with `per_trajectory`.
    pub indices: Vec<usize>,
    pub per_trajectory: Vec<f64>,
    pub failures: Vec<TrajectoryFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_method: Vec<MethodReport>,
    pub config: EvalConfig,
    pub features: String,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl EvalReport {
    pub fn get(&self, method: Method) -> Option<&MethodReport> {
        self.per_method.iter().find(|m| m.method == method)
    }
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Predicts every test trajectory's continuation after its first
/// `t_prime` steps and scores it against the recording.
pub fn evaluate_model(
    model: &StyleModel,
    data: &Dataset,
    fs: &FeatureSet,
    dynamics: &DynamicsModel,
    cfg: &EvalConfig,
) -> Vec<Result<f64>> {
    let t_prime = cfg.online.t_prime;
    data.test_indices()
        .par_iter()
        .map(|&i| {
            let traj = &data.demonstrations()[i];
            let horizon = traj.len().saturating_sub(t_prime);
            if horizon < fs.min_length() {
                return Err(Error::TooShort {
                    context: format!("test trajectory {i}"),
                    needed: t_prime + fs.min_length(),
                    found: traj.len(),
                });
            }
            let observed = traj.prefix(t_prime)?;
            let truth = traj.window(t_prime, traj.len())?;
            let pred = predict_rollout(model, &observed, &cfg.online, &cfg.mpc(horizon), fs, dynamics)?;
            med_with(&truth, &pred, &fs.position_components())
        })
        .collect()
}

fn summarize(method: Method, data: &Dataset, results: Vec<Result<f64>>) -> MethodReport {
    let mut indices = Vec::new();
    let mut per = Vec::new();
    let mut failures = Vec::new();
    for (&i, r) in data.test_indices().iter().zip(results) {
        match r {
            Ok(v) if v.is_finite() => {
                indices.push(i);
                per.push(v);
            }
            Ok(v) => failures.push(TrajectoryFailure { index: i, message: format!("non-finite error {v}") }),
            Err(e) => failures.push(TrajectoryFailure { index: i, message: e.to_string() }),
        }
    }
    let (med_mean, med_std) = mean_std(&per);
    MethodReport {
        method,
        label: method.to_string(),
        med_mean,
        med_std,
        indices,
        per_trajectory: per,
        failures,
    }
}

fn train_split<'a>(data: &'a Dataset, hook: &dyn Fn(usize)) -> Vec<&'a Trajectory> {
    data.train_indices()
        .iter()
        .map(|&i| {
            hook(i);
            &data.demonstrations()[i]
        })
        .collect()
}

/// Trains one prior per method on the training split.
pub fn train_method(
    method: Method,
    demos: &[&Trajectory],
    fs: &FeatureSet,
    dynamics: &DynamicsModel,
    cfg: &EvalConfig,
) -> Result<StyleModel> {
    match method {
        Method::Tirl => fit_tirl(demos, fs, dynamics, &cfg.irl),
        Method::PirlGmm { k } => fit_pirl_gmm(demos, fs, dynamics, k, &cfg.irl, cfg.seed, &cfg.prior()),
        Method::PirlKnn { .. } => fit_pirl_knn(demos, fs, dynamics, &cfg.irl, &cfg.prior()),
    }
}

pub fn run_comparison(
    data: &Dataset,
    methods: &[Method],
    fs: &FeatureSet,
    dynamics: &DynamicsModel,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    run_comparison_with_hook(data, methods, fs, dynamics, cfg, &|_| {})
}

/// [`run_comparison`], calling `train_access` with the dataset index of
/// every demonstration handed to a trainer.
pub fn run_comparison_with_hook(
    data: &Dataset,
    methods: &[Method],
    fs: &FeatureSet,
    dynamics: &DynamicsModel,
    cfg: &EvalConfig,
    train_access: &dyn Fn(usize),
) -> Result<EvalReport> {
    cfg.online.validate()?;
    let mut per_method = Vec::with_capacity(methods.len());
    for &method in methods {
        let demos = train_split(data, train_access);
        let report = match train_method(method, &demos, fs, dynamics, cfg) {
            Ok(model) => {
                let online = match method {
                    Method::PirlKnn { k } => OnlineConfig { k_query: k, ..cfg.online },
                    _ => cfg.online,
                };
                let c = EvalConfig { online, ..*cfg };
                summarize(method, data, evaluate_model(&model, data, fs, dynamics, &c))
            }
            Err(e) => {
                let msg = format!("training failed: {e}");
                log::warn!("{method}: {msg}");
                MethodReport {
                    method,
                    label: method.to_string(),
                    med_mean: f64::NAN,
                    med_std: f64::NAN,
                    indices: Vec::new(),
                    per_trajectory: Vec::new(),
                    failures: data
                        .test_indices()
                        .iter()
                        .map(|&i| TrajectoryFailure { index: i, message: msg.clone() })
                        .collect(),
                }
            }
        };
        per_method.push(report);
    }
    Ok(EvalReport {
        per_method,
        config: *cfg,
        features: fs.name().to_string(),
        n_train: data.train_indices().len(),
        n_test: data.test_indices().len(),
        seed: cfg.seed,
    })
}

impl Method {
    /// The method a trained model implements; nearest-neighbour models are
    /// labelled with the neighbour count they will be queried with.
    pub fn of(model: &StyleModel, k_query: usize) -> Method {
        match &model.variant {
            StyleVariant::Single { .. } => Method::Tirl,
            StyleVariant::Gmm(g) => Method::PirlGmm { k: g.gmm.k() },
            StyleVariant::Knn(_) => Method::PirlKnn { k: k_query },
        }
    }
}

/// Evaluates already trained models on the test split of `data`.
/// Models whose feature dimension differs from `fs` are rejected up front.
pub fn evaluate_models(
    models: &[(Method, &StyleModel)],
    data: &Dataset,
    fs: &FeatureSet,
    dynamics: &DynamicsModel,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.online.validate()?;
    let mut per_method = Vec::with_capacity(models.len());
    for &(method, model) in models {
        model.validate()?;
        if model.feature_set.dim() != fs.dim() {
            return Err(Error::dims("model feature dimension", fs.dim(), model.feature_set.dim()));
        }
        let online = match method {
            Method::PirlKnn { k } => OnlineConfig { k_query: k, ..cfg.online },
            _ => cfg.online,
        };
        let c = EvalConfig { online, ..*cfg };
        per_method.push(summarize(method, data, evaluate_model(model, data, fs, dynamics, &c)));
    }
    Ok(EvalReport {
        per_method,
        config: *cfg,
        features: fs.name().to_string(),
        n_train: data.train_indices().len(),
        n_test: data.test_indices().len(),
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepReport {
    pub ks: Vec<usize>,
    #[serde(with = "crate::io::nullable::vec")]
    pub med_mean: Vec<f64>,
    #[serde(with = "crate::io::nullable::vec")]
    pub med_std: Vec<f64>,
    /// Test-set dataset indices per `k`, aligned with `per_trajectory`.
    pub indices: Vec<Vec<usize>>,
    pub per_trajectory: Vec<Vec<f64>>,
    /// Failed test trajectories per `k`.
    pub failures: Vec<usize>,
}

impl KSweepReport {
    /// Rank correlation of the mean error with `k`.
    pub fn spearman(&self) -> f64 {
        spearman(&self.ks.iter().map(|&k| k as f64).collect::<Vec<_>>(), &self.med_mean)
    }
}

/// Trains the nearest-neighbour index once and evaluates each `k`.
pub fn k_sweep(
    data: &Dataset,
    ks: &[usize],
    fs: &FeatureSet,
    dynamics: &DynamicsModel,
    cfg: &EvalConfig,
) -> Result<KSweepReport> {
    let n_train = data.train_indices().len();
    if let Some(k) = ks.iter().find(|&&k| k == 0 || k > n_train) {
        return Err(Error::invalid(format!("k = {k} out of range for {n_train} training demonstrations")));
    }
    let demos = train_split(data, &|_| {});
    let model = fit_pirl_knn(&demos, fs, dynamics, &cfg.irl, &cfg.prior())?;
    let mut report = KSweepReport {
        ks: ks.to_vec(),
        med_mean: Vec::new(),
        med_std: Vec::new(),
        indices: Vec::new(),
        per_trajectory: Vec::new(),
        failures: Vec::new(),
    };
    for &k in ks {
        let c = EvalConfig {
            online: OnlineConfig { k_query: k, ..cfg.online },
            ..*cfg
        };
        let s = summarize(Method::PirlKnn { k }, data, evaluate_model(&model, data, fs, dynamics, &c));
        report.med_mean.push(s.med_mean);
        report.med_std.push(s.med_std);
        report.indices.push(s.indices);
        report.per_trajectory.push(s.per_trajectory);
        report.failures.push(s.failures.len());
    }
    Ok(report)
}

/// Members of one mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub component: usize,
    pub weight: f64,
    pub theta: CostWeights,
    /// Training demonstrations the model was fitted with in this component.
    pub train_members: usize,
    /// Demonstrations of the reported dataset assigned here.
    pub members: usize,
    /// `(label, count)` among the assigned members, when labels exist.
    pub label_counts: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub clusters: Vec<ClusterSummary>,
    /// Component of every dataset demonstration, in dataset order.
    pub assignments: Vec<usize>,
}

/// Assigns every demonstration of `data` to a component of a mixture
/// model, using the model's feature window, and tallies the members.
pub fn cluster_report(model: &StyleModel, data: &Dataset) -> Result<ClusterReport> {
    let StyleVariant::Gmm(g) = &model.variant else {
        return Err(Error::invalid(format!("{} models have no clusters", model.method_name())));
    };
    let assignments = data
        .demonstrations()
        .iter()
        .map(|t| {
            let window = model.feature_window.map_or(Ok(t.clone()), |w| t.prefix(w.min(t.len())))?;
            Ok(model.assign(&window)?.unwrap_or(0))
        })
        .collect::<Result<Vec<usize>>>()?;
    let clusters = (0..g.gmm.k())
        .map(|j| {
            let mut label_counts: Vec<(f64, usize)> = Vec::new();
            if let Some(labels) = data.labels() {
                for (a, l) in assignments.iter().zip(labels) {
                    if *a != j {
                        continue;
                    }
                    match label_counts.iter_mut().find(|(v, _)| v == l) {
                        Some(entry) => entry.1 += 1,
                        None => label_counts.push((*l, 1)),
                    }
                }
                label_counts.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
            ClusterSummary {
                component: j,
                weight: g.gmm.weights()[j],
                theta: g.thetas[j].clone(),
                train_members: g.cluster_sizes[j],
                members: assignments.iter().filter(|a| **a == j).count(),
                label_counts,
            }
        })
        .collect();
    Ok(ClusterReport { clusters, assignments })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            r[p] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, _) = mean_std(&rx);
    let (my, _) = mean_std(&ry);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::split_dataset;
    use crate::dynamics::{lqr_solve, LqrParams};
    use crate::types::State;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(values: &[f64]) -> Trajectory {
        Trajectory::from_rows(
            values.iter().map(|v| vec![*v, 0.0]).collect(),
            vec![vec![0.0]; values.len()],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn med_examples() {
        let a = line(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(med(&a, &a).unwrap(), 0.0);
        let b = line(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(med(&a, &b).unwrap(), 1.0);
        let short = line(&[5.0, 1.0]);
        assert_eq!(med(&a, &short).unwrap(), 2.5);
    }

    #[test]
    fn med_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p: Vec<f64> = (0..30).map(|_| rng.random_range(-5.0..5.0)).collect();
        let q: Vec<f64> = (0..30).map(|_| rng.random_range(-5.0..5.0)).collect();
        let direct = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 30.0;
        assert!((med(&line(&p), &line(&q)).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn med_is_a_pseudometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let mut draw = || line(&(0..8).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>());
            let (a, b, c) = (draw(), draw(), draw());
            let ab = med(&a, &b).unwrap();
            assert!(ab >= 0.0);
            assert_eq!(ab, med(&b, &a).unwrap());
            assert_eq!(med(&a, &a).unwrap(), 0.0);
            assert!(ab <= med(&a, &c).unwrap() + med(&c, &b).unwrap() + 1e-12);
        }
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 9.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    }

    fn one_style_data() -> Dataset {
        let demos: Vec<Trajectory> = (0..20)
            .map(|i| {
                lqr_solve(
                    &LqrParams { q: 2.0, r: 1.0, horizon: 50, dt: 0.1 },
                    &State::new(vec![4.0 + 0.3 * i as f64, 0.0]).unwrap(),
                )
                .unwrap()
            })
            .collect();
        split_dataset(demos, 0.75, 3).unwrap()
    }

    #[test]
    fn single_style_is_predicted_accurately() {
        let data = one_style_data();
        let dynm = DynamicsModel::point_mass(0.1).unwrap();
        let r = run_comparison(&data, &[Method::Tirl], &FeatureSet::LqrQuadratic, &dynm, &EvalConfig::default()).unwrap();
        let m = r.get(Method::Tirl).unwrap();
        assert!(m.failures.is_empty());
        assert!(m.med_mean < 1e-3, "{}", m.med_mean);
        let (mean, std) = mean_std(&m.per_trajectory);
        assert_eq!((mean, std), (m.med_mean, m.med_std));
    }

    #[test]
    fn training_never_touches_test_split() {
        use std::sync::Mutex;
        let data = one_style_data();
        let dynm = DynamicsModel::point_mass(0.1).unwrap();
        let seen = Mutex::new(Vec::new());
        run_comparison_with_hook(
            &data,
            &[Method::Tirl, Method::PirlGmm { k: 1 }, Method::PirlKnn { k: 2 }],
            &FeatureSet::LqrQuadratic,
            &dynm,
            &EvalConfig::default(),
            &|i| seen.lock().unwrap().push(i),
        )
        .unwrap();
        let seen = seen.into_inner().unwrap();
        assert!(!seen.is_empty());
        assert!(seen.iter().all(|i| data.train_indices().contains(i)));
    }

    #[test]
    fn comparison_is_deterministic() {
        let data = one_style_data();
        let dynm = DynamicsModel::point_mass(0.1).unwrap();
        let methods = [Method::PirlKnn { k: 2 }];
        let cfg = EvalConfig::default();
        let a = run_comparison(&data, &methods, &FeatureSet::LqrQuadratic, &dynm, &cfg).unwrap();
        let b = run_comparison(&data, &methods, &FeatureSet::LqrQuadratic, &dynm, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_first_entry_matches_comparison() {
        let data = one_style_data();
        let dynm = DynamicsModel::point_mass(0.1).unwrap();
        let cfg = EvalConfig::default();
        let fs = FeatureSet::LqrQuadratic;
        let sweep = k_sweep(&data, &[1, 3], &fs, &dynm, &cfg).unwrap();
        let cmp = run_comparison(&data, &[Method::PirlKnn { k: 1 }], &fs, &dynm, &cfg).unwrap();
        assert_eq!(sweep.per_trajectory[0], cmp.per_method[0].per_trajectory);
        assert!(k_sweep(&data, &[100], &fs, &dynm, &cfg).is_err());
    }
}

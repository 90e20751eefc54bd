//! Priors over cost weights: a single shared cost, a Gaussian mixture over
//! demonstration features with one cost per component, and a nearest
//! neighbour index of per-demonstration costs.

mod gmm;
mod knn;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gmm::{gmm_assign, gmm_fit, gmm_fit_traced, GmmConfig, GmmFit, GmmModel};
pub use knn::{knn_query, KnnEntry, KnnMetric, KnnStyleModel};

use crate::dataset::Dataset;
use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::irl::{self, IrlConfig};
use crate::types::{CostWeights, FeatureVector, Trajectory};

/// Per-dimension z-scoring with statistics from the training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Sample mean and standard deviation per dimension. Dimensions with
    /// (near) zero spread keep unit scale.
    pub fn fit(features: &[FeatureVector]) -> Result<Self> {
        let Some(first) = features.first() else {
            return Err(Error::invalid("no features to standardize"));
        };
        let dim = first.dim();
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            if f.dim() != dim {
                return Err(Error::dims("feature vector", dim, f.dim()));
            }
            for (m, v) in mean.iter_mut().zip(f.as_slice()) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; dim];
        if features.len() > 1 {
            for f in features {
                for ((s, v), m) in scale.iter_mut().zip(f.as_slice()).zip(&mean) {
                    *s += (v - m).powi(2) / (n - 1.0);
                }
            }
        }
        for (s, m) in scale.iter_mut().zip(&mean) {
            *s = s.sqrt();
            if !(*s > 1e-12 * (1.0 + m.abs())) {
                *s = 1.0;
            }
        }
        Ok(Standardizer { mean, scale })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn apply(&self, f: &FeatureVector) -> Result<FeatureVector> {
        if f.dim() != self.dim() {
            return Err(Error::dims("feature vector", self.dim(), f.dim()));
        }
        FeatureVector::new(
            f.as_slice()
                .iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .map(|((v, m), s)| (v - m) / s)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmStyleModel {
    pub gmm: GmmModel,
    pub thetas: Vec<CostWeights>,
    /// Training demonstrations assigned to each component.
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum StyleVariant {
    Single { theta: CostWeights },
    Gmm(GmmStyleModel),
    Knn(KnnStyleModel),
}

/// A trained prior together with the feature map and the feature
/// statistics its queries are expressed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleModel {
    pub variant: StyleVariant,
    pub feature_set: FeatureSet,
    pub standardizer: Standardizer,
    /// Leading steps of each training demonstration whose features index
    /// the prior. Queries should use observation windows of this length.
    pub feature_window: Option<usize>,
}

impl StyleModel {
    pub fn single(theta: CostWeights, feature_set: FeatureSet) -> Self {
        let dim = feature_set.dim();
        StyleModel {
            variant: StyleVariant::Single { theta },
            feature_set,
            standardizer: Standardizer::identity(dim),
            feature_window: None,
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self.variant {
            StyleVariant::Single { .. } => "tirl",
            StyleVariant::Gmm(_) => "pirl_gmm",
            StyleVariant::Knn(_) => "pirl_knn",
        }
    }

    /// Standardized features of an observation window.
    pub fn query_features(&self, history: &Trajectory) -> Result<FeatureVector> {
        self.standardizer.apply(&self.feature_set.evaluate(history)?)
    }

    /// Mixture component a trajectory window falls into, for mixture priors.
    pub fn assign(&self, history: &Trajectory) -> Result<Option<usize>> {
        match &self.variant {
            StyleVariant::Gmm(g) => Ok(Some(gmm_assign(&g.gmm, &self.query_features(history)?))),
            _ => Ok(None),
        }
    }

    /// Every cost weight vector the model can return.
    pub fn thetas(&self) -> Vec<&CostWeights> {
        match &self.variant {
            StyleVariant::Single { theta } => vec![theta],
            StyleVariant::Gmm(g) => g.thetas.iter().collect(),
            StyleVariant::Knn(k) => k.entries().iter().map(|e| &e.theta).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fdim = self.feature_set.dim();
        if self.standardizer.dim() != fdim {
            return Err(Error::dims("standardizer", fdim, self.standardizer.dim()));
        }
        for t in self.thetas() {
            if t.dim() != fdim {
                return Err(Error::dims("cost weights", fdim, t.dim()));
            }
        }
        match &self.variant {
            StyleVariant::Gmm(g) => {
                if g.thetas.len() != g.gmm.k() {
                    return Err(Error::dims("mixture costs", g.gmm.k(), g.thetas.len()));
                }
                if g.gmm.dim() != fdim {
                    return Err(Error::dims("mixture dimension", fdim, g.gmm.dim()));
                }
            }
            StyleVariant::Knn(k) if k.feature_dim() != fdim => {
                return Err(Error::dims("kNN feature dimension", fdim, k.feature_dim()));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorOptions {
    /// Leading steps whose features index the prior (`None`: whole demo).
    pub feature_window: Option<usize>,
    pub standardize: bool,
    pub gmm: GmmConfig,
}

impl Default for PriorOptions {
    fn default() -> Self {
        PriorOptions {
            feature_window: Some(10),
            standardize: true,
            gmm: GmmConfig::default(),
        }
    }
}

/// Features of each demonstration's leading `window` steps (whole
/// demonstration when shorter or when no window is set).
pub fn prior_features(demos: &[&Trajectory], fs: &FeatureSet, window: Option<usize>) -> Result<Vec<FeatureVector>> {
    demos
        .par_iter()
        .map(|t| match window {
            Some(w) if w < t.len() => fs.evaluate(&t.prefix(w)?),
            _ => fs.evaluate(t),
        })
        .collect()
}

fn indexed_features(
    demos: &[&Trajectory],
    fs: &FeatureSet,
    opts: &PriorOptions,
) -> Result<(Standardizer, Vec<FeatureVector>)> {
    if let Some(w) = opts.feature_window {
        if w < fs.min_length() {
            return Err(Error::invalid(format!(
                "feature window {w} is shorter than the {} steps the features need",
                fs.min_length()
            )));
        }
    }
    let raw = prior_features(demos, fs, opts.feature_window)?;
    let st = if opts.standardize {
        Standardizer::fit(&raw)?
    } else {
        Standardizer::identity(fs.dim())
    };
    let z = raw.iter().map(|f| st.apply(f)).collect::<Result<Vec<_>>>()?;
    Ok((st, z))
}

fn nonempty(demos: &[&Trajectory]) -> Result<()> {
    if demos.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    Ok(())
}

/// One cost fitted to every demonstration.
pub fn fit_tirl(demos: &[&Trajectory], fs: &FeatureSet, model: &DynamicsModel, irl: &IrlConfig) -> Result<StyleModel> {
    nonempty(demos)?;
    let res = irl::fit(demos, fs, model, irl)?;
    Ok(StyleModel::single(res.theta, fs.clone()))
}

/// Mixture over demonstration features, hard assignment, one cost per component.
#[allow(clippy::too_many_arguments)]
pub fn fit_pirl_gmm(
    demos: &[&Trajectory],
    fs: &FeatureSet,
    model: &DynamicsModel,
    k: usize,
    irl: &IrlConfig,
    seed: u64,
    opts: &PriorOptions,
) -> Result<StyleModel> {
    nonempty(demos)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let (standardizer, z) = indexed_features(demos, fs, opts)?;
    let gmm = gmm_fit_traced(&z, k, seed, &opts.gmm)?.model;
    let mut subsets: Vec<Vec<&Trajectory>> = vec![Vec::new(); k];
    for (t, f) in demos.iter().zip(&z) {
        subsets[gmm_assign(&gmm, f)].push(t);
    }
    if let Some(j) = subsets.iter().position(|s| s.is_empty()) {
        return Err(Error::EmptyCluster(j));
    }
    let thetas = subsets
        .par_iter()
        .map(|s| irl::fit(s, fs, model, irl).map(|r| r.theta))
        .collect::<Result<Vec<_>>>()?;
    Ok(StyleModel {
        variant: StyleVariant::Gmm(GmmStyleModel {
            gmm,
            thetas,
            cluster_sizes: subsets.iter().map(|s| s.len()).collect(),
        }),
        feature_set: fs.clone(),
        standardizer,
        feature_window: opts.feature_window,
    })
}

/// One cost per demonstration, indexed by that demonstration's features.
/// Demonstrations whose fit fails are skipped and counted.
pub fn fit_pirl_knn(
    demos: &[&Trajectory],
    fs: &FeatureSet,
    model: &DynamicsModel,
    irl: &IrlConfig,
    opts: &PriorOptions,
) -> Result<StyleModel> {
    nonempty(demos)?;
    let (standardizer, z) = indexed_features(demos, fs, opts)?;
    let fits: Vec<Result<CostWeights>> = demos
        .par_iter()
        .map(|t| irl::fit(&[t], fs, model, irl).map(|r| r.theta))
        .collect();
    let mut entries = Vec::with_capacity(demos.len());
    let mut dropped = 0;
    for (i, (f, r)) in z.into_iter().zip(fits).enumerate() {
        match r {
            Ok(theta) => entries.push(KnnEntry { feature: f, theta }),
            Err(e) => {
                log::warn!("dropping demonstration {i} from the kNN index: {e}");
                dropped += 1;
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Numerical(format!("all {dropped} per-demonstration fits failed")));
    }
    Ok(StyleModel {
        variant: StyleVariant::Knn(KnnStyleModel::with_dropped(entries, dropped)?),
        feature_set: fs.clone(),
        standardizer,
        feature_window: opts.feature_window,
    })
}

pub fn train_tirl(data: &Dataset, fs: &FeatureSet, model: &DynamicsModel, irl: &IrlConfig) -> Result<StyleModel> {
    fit_tirl(&data.train_demos(), fs, model, irl)
}

#[allow(clippy::too_many_arguments)]
pub fn train_pirl_gmm(
    data: &Dataset,
    fs: &FeatureSet,
    model: &DynamicsModel,
    k: usize,
    irl: &IrlConfig,
    seed: u64,
    opts: &PriorOptions,
) -> Result<StyleModel> {
    fit_pirl_gmm(&data.train_demos(), fs, model, k, irl, seed, opts)
}

pub fn train_pirl_knn(
    data: &Dataset,
    fs: &FeatureSet,
    model: &DynamicsModel,
    irl: &IrlConfig,
    opts: &PriorOptions,
) -> Result<StyleModel> {
    fit_pirl_knn(&data.train_demos(), fs, model, irl, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lqr_solve, LqrParams};
    use crate::types::State;

    fn demo(ratio: f64, p0: f64) -> Trajectory {
        lqr_solve(
            &LqrParams { q: ratio, r: 1.0, horizon: 50, dt: 0.1 },
            &State::new(vec![p0, 0.0]).unwrap(),
        )
        .unwrap()
    }

    fn irl_cfg() -> IrlConfig {
        IrlConfig { beta: 100.0, ..IrlConfig::default() }
    }

    fn two_style_demos() -> (Vec<Trajectory>, Vec<usize>) {
        let mut demos = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            let p0 = 4.0 + 0.2 * i as f64;
            demos.push(demo(4.0 + 0.05 * (i % 5) as f64, p0));
            labels.push(0);
            demos.push(demo(0.4 + 0.005 * (i % 5) as f64, p0 + 0.1));
            labels.push(1);
        }
        (demos, labels)
    }

    #[test]
    fn standardizer_zero_mean_unit_scale() {
        let f: Vec<FeatureVector> = [[1.0, 10.0], [3.0, 10.0], [5.0, 10.0]]
            .iter()
            .map(|v| FeatureVector::new(v.to_vec()).unwrap())
            .collect();
        let st = Standardizer::fit(&f).unwrap();
        assert_eq!(st.mean(), &[3.0, 10.0]);
        assert_eq!(st.scale(), &[2.0, 1.0]);
        assert_eq!(st.apply(&f[2]).unwrap().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn single_component_mixture_equals_tirl() {
        let (demos, _) = two_style_demos();
        let refs: Vec<&Trajectory> = demos.iter().collect();
        let model = DynamicsModel::point_mass(0.1).unwrap();
        let fs = FeatureSet::LqrQuadratic;
        let tirl = fit_tirl(&refs, &fs, &model, &irl_cfg()).unwrap();
        let gmm = fit_pirl_gmm(&refs, &fs, &model, 1, &irl_cfg(), 3, &PriorOptions::default()).unwrap();
        let (a, b) = (tirl.thetas()[0].as_slice(), gmm.thetas()[0].as_slice());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn mixture_recovers_both_styles() {
        let (demos, labels) = two_style_demos();
        let refs: Vec<&Trajectory> = demos.iter().collect();
        let model = DynamicsModel::point_mass(0.1).unwrap();
        let fs = FeatureSet::LqrQuadratic;
        let sm = fit_pirl_gmm(&refs, &fs, &model, 2, &irl_cfg(), 1, &PriorOptions::default()).unwrap();
        let mut ratios: Vec<f64> = sm.thetas().iter().map(|t| t.ratio()).collect();
        ratios.sort_by(f64::total_cmp);
        assert!((ratios[0] - 0.41).abs() / 0.41 < 0.25, "{ratios:?}");
        assert!((ratios[1] - 4.1).abs() / 4.1 < 0.25, "{ratios:?}");
        let assigned: Vec<usize> = demos
            .iter()
            .map(|d| sm.assign(&d.prefix(10).unwrap()).unwrap().unwrap())
            .collect();
        let agree = assigned.iter().zip(&labels).filter(|(a, b)| a == b).count();
        let acc = agree.max(demos.len() - agree) as f64 / demos.len() as f64;
        assert!(acc >= 0.95, "accuracy {acc}");
    }

    #[test]
    fn knn_entries_follow_labels_and_duplicates_agree() {
        let a = demo(4.0, 6.0);
        let b = demo(0.4, 6.0);
        let refs = vec![&a, &b, &a];
        let model = DynamicsModel::point_mass(0.1).unwrap();
        let sm = fit_pirl_knn(&refs, &FeatureSet::LqrQuadratic, &model, &irl_cfg(), &PriorOptions::default()).unwrap();
        let StyleVariant::Knn(k) = &sm.variant else { panic!() };
        assert_eq!(k.len(), 3);
        assert_eq!(k.entries()[0], k.entries()[2]);
        assert!(k.entries()[0].theta.ratio() > k.entries()[1].theta.ratio());
    }

    #[test]
    fn singleton_knn_answers_everything_with_its_theta() {
        let a = demo(2.0, 5.0);
        let model = DynamicsModel::point_mass(0.1).unwrap();
        let sm = fit_pirl_knn(&[&a], &FeatureSet::LqrQuadratic, &model, &irl_cfg(), &PriorOptions::default()).unwrap();
        let StyleVariant::Knn(k) = &sm.variant else { panic!() };
        let q = FeatureVector::new(vec![123.0, -4.0]).unwrap();
        assert_eq!(&knn_query(k, &q, 1).unwrap(), sm.thetas()[0]);
    }

    #[test]
    fn mixture_training_is_deterministic() {
        let (demos, _) = two_style_demos();
        let refs: Vec<&Trajectory> = demos.iter().collect();
        let model = DynamicsModel::point_mass(0.1).unwrap();
        let fs = FeatureSet::LqrQuadratic;
        let a = fit_pirl_gmm(&refs, &fs, &model, 2, &irl_cfg(), 9, &PriorOptions::default()).unwrap();
        let b = fit_pirl_gmm(&refs, &fs, &model, 2, &irl_cfg(), 9, &PriorOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_training_split_errors() {
        let model = DynamicsModel::point_mass(0.1).unwrap();
        assert!(fit_tirl(&[], &FeatureSet::LqrQuadratic, &model, &irl_cfg()).is_err());
    }
}

//! A synthetic longitudinal driving corpus: point-mass vehicles following a
//! winding reference path, each driving MPC-optimally under one of a few
//! cost styles over the speed-tracking, acceleration and jerk features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_dataset, Dataset};
use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::features::{DesiredVelocityFormula, FeatureConfig, FeatureSet, ReferencePath};
use crate::predict::{mpc_predict, MpcConfig};
use crate::types::{CostWeights, State, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingStyle {
    pub weight: f64,
    /// Weights on `[speed tracking, acceleration, jerk]`.
    pub theta: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrivingCorpusConfig {
    pub styles: Vec<DrivingStyle>,
    /// Log-normal spread applied to each weight of a drawn style.
    pub theta_jitter: f64,
    pub n_trajectories: usize,
    pub steps: usize,
    pub dt: f64,
    /// Total arclength of the generated path and its waypoint spacing.
    pub path_length: f64,
    pub path_spacing: f64,
    /// Peak curvature and wavelength of the sinusoidal curvature profile.
    pub path_peak_curvature: f64,
    pub path_wavelength: f64,
    pub s0_range: [f64; 2],
    pub v0_range: [f64; 2],
    pub features: FeatureConfig,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for DrivingCorpusConfig {
    fn default() -> Self {
        DrivingCorpusConfig {
            styles: vec![
                DrivingStyle { weight: 0.5, theta: [0.90, 0.07, 0.03] },
                DrivingStyle { weight: 0.5, theta: [0.10, 0.45, 0.45] },
            ],
            theta_jitter: 0.1,
            n_trajectories: 270,
            steps: 40,
            dt: 0.2,
            path_length: 900.0,
            path_spacing: 1.0,
            path_peak_curvature: 0.05,
            path_wavelength: 160.0,
            s0_range: [10.0, 700.0],
            v0_range: [3.0, 12.0],
            features: FeatureConfig {
                desired_velocity_formula: DesiredVelocityFormula::InverseCurvature,
                ..FeatureConfig::default()
            },
            train_fraction: 210.0 / 270.0,
            seed: 0,
        }
    }
}

impl DrivingCorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.styles.is_empty() {
            return Err(Error::invalid("need at least one driving style"));
        }
        let total: f64 = self.styles.iter().map(|s| s.weight).sum();
        if self.styles.iter().any(|s| !(s.weight > 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("style weights must be positive and sum to one"));
        }
        if self.n_trajectories < 2 || self.steps < 4 {
            return Err(Error::invalid("need at least two trajectories of four steps"));
        }
        if !(self.dt > 0.0 && self.path_spacing > 0.0 && self.path_length > 3.0 * self.path_spacing) {
            return Err(Error::invalid("dt, path spacing and path length must be positive"));
        }
        if !(self.theta_jitter >= 0.0) {
            return Err(Error::invalid("theta_jitter must be nonnegative"));
        }
        self.features.validate()
    }

    /// The winding path: curvature `κ_max · sin(2π s / λ)`.
    pub fn reference_path(&self) -> Result<ReferencePath> {
        let n = (self.path_length / self.path_spacing).round() as usize;
        let (peak, wl) = (self.path_peak_curvature, self.path_wavelength);
        ReferencePath::from_curvature_profile([0.0, 0.0], 0.0, self.path_spacing, n, |s| {
            peak * (2.0 * std::f64::consts::PI * s / wl).sin()
        })
    }

    pub fn feature_set(&self) -> Result<FeatureSet> {
        Ok(FeatureSet::driving(self.reference_path()?, self.features))
    }
}

/// A generated corpus: the dataset (labels hold the style index), the
/// feature map built on its path and every demonstration's true weights.
#[derive(Debug, Clone)]
pub struct DrivingCorpus {
    pub dataset: Dataset,
    pub feature_set: FeatureSet,
    pub model: DynamicsModel,
    pub thetas: Vec<CostWeights>,
}

pub fn generate_driving_corpus(cfg: &DrivingCorpusConfig) -> Result<DrivingCorpus> {
    cfg.validate()?;
    let fs = cfg.feature_set()?;
    let model = DynamicsModel::point_mass(cfg.dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter = Normal::new(0.0, cfg.theta_jitter).map_err(|e| Error::invalid(e.to_string()))?;
    let mut draws = Vec::with_capacity(cfg.n_trajectories);
    for _ in 0..cfg.n_trajectories {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut style = cfg.styles.len() - 1;
        for (j, s) in cfg.styles.iter().enumerate() {
            acc += s.weight;
            if u < acc {
                style = j;
                break;
            }
        }
        let raw: Vec<f64> = cfg.styles[style]
            .theta
            .iter()
            .map(|t| t * jitter.sample(&mut rng).exp())
            .collect();
        let theta = CostWeights::new(raw)?;
        let s0 = rng.random_range(cfg.s0_range[0]..=cfg.s0_range[1]);
        let v0 = rng.random_range(cfg.v0_range[0]..=cfg.v0_range[1]);
        draws.push((style, theta, s0, v0));
    }
    let mpc = MpcConfig {
        horizon: cfg.steps,
        max_iters: 60,
        grad_tol: 1e-7,
        ..MpcConfig::default()
    };
    let demos = draws
        .par_iter()
        .map(|(_, theta, s0, v0)| mpc_predict(theta, &fs, &model, &State::new(vec![*s0, *v0])?, &mpc))
        .collect::<Result<Vec<Trajectory>>>()?;
    let labels = draws.iter().map(|d| d.0 as f64).collect();
    let thetas = draws.into_iter().map(|d| d.1).collect();
    let dataset = split_dataset(demos, cfg.train_fraction, cfg.seed)?.with_labels(labels)?;
    Ok(DrivingCorpus {
        dataset,
        feature_set: fs,
        model,
        thetas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DrivingCorpusConfig {
        DrivingCorpusConfig {
            n_trajectories: 12,
            steps: 20,
            seed: 5,
            ..DrivingCorpusConfig::default()
        }
    }

    #[test]
    fn corpus_is_deterministic_and_sized() {
        let a = generate_driving_corpus(&small()).unwrap();
        let b = generate_driving_corpus(&small()).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.dataset.len(), 12);
        assert!(a.dataset.demonstrations().iter().all(|t| t.len() == 20));
    }

    #[test]
    fn styles_separate_in_feature_space() {
        let c = generate_driving_corpus(&DrivingCorpusConfig { n_trajectories: 40, ..small() }).unwrap();
        let labels = c.dataset.labels().unwrap();
        let mut tracking = [Vec::new(), Vec::new()];
        for (t, l) in c.dataset.demonstrations().iter().zip(labels) {
            tracking[*l as usize].push(c.feature_set.evaluate(t).unwrap().as_slice()[0]);
        }
        let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        // the tracking-heavy style ends up closer to the desired speed
        assert!(mean(&tracking[0]) < mean(&tracking[1]));
    }
}

//! Synthetic demonstrations: LQR-optimal point-mass trajectories whose
//! state-to-effort ratios are drawn from a Gaussian mixture.

mod driving;

pub use driving::{generate_driving_corpus, DrivingCorpus, DrivingCorpusConfig, DrivingStyle};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_dataset, Dataset};
use crate::dynamics::{lqr_solve, LqrParams};
use crate::error::{Error, Result};
use crate::types::{State, Trajectory};

const MAX_REJECTIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaKernel {
    pub weight: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSamplerConfig {
    pub kernels: Vec<ThetaKernel>,
    pub seed: u64,
}

impl ThetaSamplerConfig {
    /// Two equally weighted kernels, `N(4, 1)` and `N(0.4, 0.1)`.
    pub fn two_kernel(seed: u64) -> Self {
        ThetaSamplerConfig {
            kernels: vec![
                ThetaKernel { weight: 0.5, mu: 4.0, sigma: 1.0 },
                ThetaKernel { weight: 0.5, mu: 0.4, sigma: 0.1 },
            ],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(Error::invalid("theta sampler needs at least one kernel"));
        }
        for (i, k) in self.kernels.iter().enumerate() {
            if !(k.weight > 0.0 && k.weight.is_finite()) {
                return Err(Error::invalid(format!("kernel {i}: weight must be positive")));
            }
            if !(k.sigma > 0.0 && k.sigma.is_finite()) {
                return Err(Error::invalid(format!("kernel {i}: sigma must be positive")));
            }
            if !k.mu.is_finite() {
                return Err(Error::NonFinite(format!("kernel {i} mean")));
            }
        }
        let total: f64 = self.kernels.iter().map(|k| k.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("kernel weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Seeded draws of positive ratios from a validated kernel mixture.
#[derive(Debug, Clone)]
pub struct ThetaSampler {
    kernels: Vec<(f64, Normal<f64>)>,
    rng: ChaCha8Rng,
}

impl ThetaSampler {
    pub fn new(config: &ThetaSamplerConfig) -> Result<Self> {
        config.validate()?;
        let kernels = config
            .kernels
            .iter()
            .map(|k| {
                Normal::new(k.mu, k.sigma)
                    .map(|n| (k.weight, n))
                    .map_err(|e| Error::invalid(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ThetaSampler {
            kernels,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    /// One draw together with the index of the kernel that produced it.
    /// Non-positive draws are discarded and the whole draw repeated.
    pub fn sample_labeled(&mut self) -> Result<(f64, usize)> {
        for _ in 0..MAX_REJECTIONS {
            let pick: f64 = self.rng.random();
            let mut acc = 0.0;
            let mut idx = self.kernels.len() - 1;
            for (i, (w, _)) in self.kernels.iter().enumerate() {
                acc += w;
                if pick < acc {
                    idx = i;
                    break;
                }
            }
            let theta = self.kernels[idx].1.sample(&mut self.rng);
            if theta > 0.0 {
                return Ok((theta, idx));
            }
        }
        Err(Error::Numerical(format!(
            "theta sampler rejected {MAX_REJECTIONS} consecutive draws"
        )))
    }

    pub fn sample(&mut self) -> Result<f64> {
        self.sample_labeled().map(|(t, _)| t)
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Convenience single draw with a fresh sampler.
pub fn sample_theta(config: &ThetaSamplerConfig) -> Result<f64> {
    ThetaSampler::new(config)?.sample()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_trajectories: usize,
    pub horizon: usize,
    pub dt: f64,
    pub x0_position_range: [f64; 2],
    pub x0_velocity_range: [f64; 2],
    pub train_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_trajectories: 2000,
            horizon: 50,
            dt: 0.1,
            x0_position_range: [4.0, 10.0],
            x0_velocity_range: [0.0, 0.0],
            train_fraction: 0.9,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories < 2 {
            return Err(Error::invalid("need at least two trajectories"));
        }
        if self.horizon < 2 {
            return Err(Error::invalid("horizon must be at least 2"));
        }
        for (name, r) in [
            ("position", self.x0_position_range),
            ("velocity", self.x0_velocity_range),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return Err(Error::invalid(format!("x0 {name} range {r:?} is not ordered")));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..range[1])
    }
}

/// Samples ratios and initial states serially, then solves one LQR per
/// trajectory. Labels hold the generating ratio `q/r` (with `r = 1`).
pub fn generate_dataset(sampler: &ThetaSamplerConfig, synth: &SynthConfig) -> Result<Dataset> {
    generate_labeled_dataset(sampler, synth).map(|(d, _)| d)
}

/// [`generate_dataset`] together with the index of the kernel behind each
/// demonstration.
pub fn generate_labeled_dataset(sampler: &ThetaSamplerConfig, synth: &SynthConfig) -> Result<(Dataset, Vec<usize>)> {
    synth.validate()?;
    let mut s = ThetaSampler::new(sampler)?;
    let mut draws = Vec::with_capacity(synth.n_trajectories);
    let mut kernels = Vec::with_capacity(synth.n_trajectories);
    for _ in 0..synth.n_trajectories {
        let (theta, kernel) = s.sample_labeled()?;
        let p = uniform(s.rng(), synth.x0_position_range);
        let v = uniform(s.rng(), synth.x0_velocity_range);
        draws.push((theta, p, v));
        kernels.push(kernel);
    }
    let demos = draws
        .par_iter()
        .map(|&(theta, p, v)| {
            let params = LqrParams {
                q: theta,
                r: 1.0,
                horizon: synth.horizon,
                dt: synth.dt,
            };
            lqr_solve(&params, &State::new(vec![p, v])?)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = draws.iter().map(|d| d.0).collect();
    let data = split_dataset(demos, synth.train_fraction, sampler.seed)?.with_labels(labels)?;
    Ok((data, kernels))
}

/// A copy of `data` with independent Gaussian noise of standard deviation
/// `sigma` added to the position component of every stored state.
pub fn add_position_noise(data: &Dataset, sigma: f64, seed: u64) -> Result<Dataset> {
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut demos = Vec::with_capacity(data.len());
    for t in data.demonstrations() {
        let states = t
            .states()
            .iter()
            .map(|x| {
                let mut v = x.as_slice().to_vec();
                v[0] += noise.sample(&mut rng);
                v
            })
            .collect();
        let actions = t.actions().iter().map(|u| u.as_slice().to_vec()).collect();
        demos.push(Trajectory::from_rows(states, actions, t.dt())?);
    }
    let out = Dataset::new(demos, None, data.train_indices().to_vec(), data.test_indices().to_vec())?;
    match data.labels() {
        Some(l) => out.with_labels(l.to_vec()),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{validate_trajectory, DynamicsModel};

    #[test]
    fn sampler_component_means() {
        let mut s = ThetaSampler::new(&ThetaSamplerConfig::two_kernel(11)).unwrap();
        let mut groups = [Vec::new(), Vec::new()];
        for _ in 0..100_000 {
            let (t, k) = s.sample_labeled().unwrap();
            assert!(t > 0.0);
            groups[k].push(t);
        }
        for (g, (mu, sigma)) in groups.iter().zip([(4.0, 1.0), (0.4, 0.1)]) {
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            let se = sigma / (g.len() as f64).sqrt();
            assert!((mean - mu).abs() < 3.0 * se, "mean {mean} vs {mu}");
        }
    }

    #[test]
    fn sampler_rejects_zero_sigma() {
        let cfg = ThetaSamplerConfig {
            kernels: vec![ThetaKernel { weight: 1.0, mu: 4.0, sigma: 0.0 }],
            seed: 0,
        };
        assert!(ThetaSampler::new(&cfg).is_err());
        assert!(sample_theta(&cfg).is_err());
    }

    #[test]
    fn sampler_rejects_bad_weights() {
        let mut cfg = ThetaSamplerConfig::two_kernel(0);
        cfg.kernels[0].weight = 0.7;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sampler_is_deterministic() {
        let cfg = ThetaSamplerConfig::two_kernel(5);
        let mut a = ThetaSampler::new(&cfg).unwrap();
        let mut b = ThetaSampler::new(&cfg).unwrap();
        for _ in 0..100 {
            assert_eq!(a.sample().unwrap().to_bits(), b.sample().unwrap().to_bits());
        }
    }

    #[test]
    fn sampler_gives_up_when_mass_is_negative() {
        let cfg = ThetaSamplerConfig {
            kernels: vec![ThetaKernel { weight: 1.0, mu: -1e6, sigma: 1.0 }],
            seed: 0,
        };
        assert!(matches!(sample_theta(&cfg), Err(Error::Numerical(_))));
    }

    #[test]
    fn small_dataset_is_valid_and_reproducible() {
        let synth = SynthConfig { n_trajectories: 60, ..SynthConfig::default() };
        let cfg = ThetaSamplerConfig::two_kernel(3);
        let d = generate_dataset(&cfg, &synth).unwrap();
        assert_eq!(d.train_indices().len(), 54);
        let model = DynamicsModel::point_mass(synth.dt).unwrap();
        for t in d.demonstrations() {
            assert_eq!(t.len(), synth.horizon);
            assert!(validate_trajectory(t, &model, 1e-9).unwrap());
        }
        assert!(d.labels().unwrap().iter().all(|&l| l > 0.0));
        assert_eq!(d, generate_dataset(&cfg, &synth).unwrap());
    }
}

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::predict::mpc::{mpc_predict, MpcConfig, MpcInit};
use crate::priors::{gmm_assign, knn_query, StyleModel, StyleVariant};
use crate::types::{CostWeights, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OnlineConfig {
    /// Observation steps used to infer the cost.
    pub t_prime: usize,
    /// Steps executed between re-inferences; `None` infers once.
    pub reinfer_every: Option<usize>,
    /// Neighbours consulted by nearest-neighbour priors.
    pub k_query: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            t_prime: 10,
            reinfer_every: None,
            k_query: 1,
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_prime < 4 {
            return Err(Error::invalid("t_prime must be at least 4"));
        }
        if self.reinfer_every == Some(0) {
            return Err(Error::invalid("reinfer_every must be positive"));
        }
        if self.k_query == 0 {
            return Err(Error::invalid("k_query must be at least 1"));
        }
        Ok(())
    }
}

/// The cost the prior considers most likely for an observation window.
pub fn infer_theta(model: &StyleModel, history: &Trajectory, fs: &FeatureSet, k_query: usize) -> Result<CostWeights> {
    if fs.dim() != model.feature_set.dim() {
        return Err(Error::dims("feature set", model.feature_set.dim(), fs.dim()));
    }
    if history.len() < fs.min_length() {
        return Err(Error::TooShort {
            context: "inference history".into(),
            needed: fs.min_length(),
            found: history.len(),
        });
    }
    match &model.variant {
        StyleVariant::Single { theta } => Ok(theta.clone()),
        StyleVariant::Gmm(g) => {
            let f = model.standardizer.apply(&fs.evaluate(history)?)?;
            Ok(g.thetas[gmm_assign(&g.gmm, &f)].clone())
        }
        StyleVariant::Knn(k) => {
            let f = model.standardizer.apply(&fs.evaluate(history)?)?;
            knn_query(k, &f, k_query)
        }
    }
}

/// Predicts `mpc.horizon` steps following `observed`, starting from the
/// state its last action leads to.
///
/// The cost is inferred from the last `t_prime` observed steps. With a
/// re-inference cadence shorter than the horizon, the full remaining
/// horizon is re-planned every `reinfer_every` steps under a cost inferred
/// from the latest window of observations and predictions, keeping only
/// the first `reinfer_every` predicted steps each time.
pub fn predict_rollout(
    model: &StyleModel,
    observed: &Trajectory,
    online: &OnlineConfig,
    mpc: &MpcConfig,
    fs: &FeatureSet,
    dynamics: &DynamicsModel,
) -> Result<Trajectory> {
    online.validate()?;
    mpc.validate(dynamics)?;
    if observed.len() < online.t_prime {
        return Err(Error::TooShort {
            context: "observed trajectory".into(),
            needed: online.t_prime,
            found: observed.len(),
        });
    }
    let horizon = mpc.horizon;
    let cadence = online.reinfer_every.unwrap_or(horizon).min(horizon);

    let mut states = observed.states().to_vec();
    let mut actions = observed.actions().to_vec();
    let mut start = dynamics.next_state(observed)?;
    let first_pred = states.len();
    let mut produced = 0;
    while produced < horizon {
        let history = Trajectory::new(
            states[states.len() - online.t_prime..].to_vec(),
            actions[actions.len() - online.t_prime..].to_vec(),
            observed.dt(),
        )?;
        let theta = infer_theta(model, &history, fs, online.k_query)?;
        let remaining = horizon - produced;
        let cfg = MpcConfig {
            horizon: remaining.max(fs.min_length()),
            init: MpcInit::Zero,
            ..mpc.clone()
        };
        let plan = mpc_predict(&theta, fs, dynamics, &start, &cfg)?;
        let keep = cadence.min(remaining);
        states.extend_from_slice(&plan.states()[..keep]);
        actions.extend_from_slice(&plan.actions()[..keep]);
        produced += keep;
        if produced < horizon {
            start = dynamics.step(&plan.states()[keep - 1], &plan.actions()[keep - 1])?;
        }
    }
    if let MpcInit::Actions(_) = mpc.init {
        log::debug!("warm start ignored by the rollout loop");
    }
    Trajectory::new(states[first_pred..].to_vec(), actions[first_pred..].to_vec(), observed.dt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lqr_solve, LqrParams};
    use crate::priors::{fit_pirl_gmm, fit_pirl_knn, PriorOptions};
    use crate::irl::IrlConfig;
    use crate::types::State;

    fn demo(ratio: f64, p0: f64) -> Trajectory {
        lqr_solve(
            &LqrParams { q: ratio, r: 1.0, horizon: 50, dt: 0.1 },
            &State::new(vec![p0, 0.0]).unwrap(),
        )
        .unwrap()
    }

    fn irl() -> IrlConfig {
        IrlConfig { beta: 100.0, ..IrlConfig::default() }
    }

    #[test]
    fn single_model_ignores_history() {
        let theta = CostWeights::from_ratio(2.0).unwrap();
        let m = StyleModel::single(theta.clone(), FeatureSet::LqrQuadratic);
        let h = demo(7.0, 3.0).prefix(10).unwrap();
        assert_eq!(infer_theta(&m, &h, &FeatureSet::LqrQuadratic, 1).unwrap(), theta);
    }

    #[test]
    fn single_model_rollout_is_plain_mpc() {
        let theta = CostWeights::from_ratio(2.0).unwrap();
        let m = StyleModel::single(theta.clone(), FeatureSet::LqrQuadratic);
        let dynm = DynamicsModel::point_mass(0.1).unwrap();
        let obs = demo(2.0, 6.0).prefix(10).unwrap();
        let mpc = MpcConfig { horizon: 40, ..MpcConfig::default() };
        let fs = FeatureSet::LqrQuadratic;
        let once = predict_rollout(&m, &obs, &OnlineConfig::default(), &mpc, &fs, &dynm).unwrap();
        let direct = mpc_predict(&theta, &fs, &dynm, &dynm.next_state(&obs).unwrap(), &mpc).unwrap();
        assert_eq!(once, direct);
        let chunked = predict_rollout(
            &m,
            &obs,
            &OnlineConfig { reinfer_every: Some(7), ..OnlineConfig::default() },
            &mpc,
            &fs,
            &dynm,
        )
        .unwrap();
        let gap = once
            .states()
            .iter()
            .zip(chunked.states())
            .map(|(a, b)| (a.as_slice()[0] - b.as_slice()[0]).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-8, "{gap}");
    }

    #[test]
    fn true_cost_reproduces_continuation() {
        let full = demo(4.0, 8.0);
        let m = StyleModel::single(CostWeights::from_ratio(4.0).unwrap(), FeatureSet::LqrQuadratic);
        let dynm = DynamicsModel::point_mass(0.1).unwrap();
        let mpc = MpcConfig { horizon: 40, ..MpcConfig::default() };
        let pred = predict_rollout(&m, &full.prefix(10).unwrap(), &OnlineConfig::default(), &mpc, &FeatureSet::LqrQuadratic, &dynm).unwrap();
        let truth = full.suffix(40).unwrap();
        for (a, b) in pred.states().iter().zip(truth.states()) {
            assert!((a.as_slice()[0] - b.as_slice()[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn too_short_observation_errors() {
        let m = StyleModel::single(CostWeights::from_ratio(1.0).unwrap(), FeatureSet::LqrQuadratic);
        let dynm = DynamicsModel::point_mass(0.1).unwrap();
        let obs = demo(1.0, 5.0).prefix(5).unwrap();
        let r = predict_rollout(&m, &obs, &OnlineConfig::default(), &MpcConfig::default(), &FeatureSet::LqrQuadratic, &dynm);
        assert!(matches!(r, Err(Error::TooShort { .. })));
    }

    #[test]
    fn priors_return_training_costs_on_replayed_windows() {
        let demos: Vec<Trajectory> = (0..12)
            .map(|i| if i % 2 == 0 { demo(4.0, 4.0 + i as f64 * 0.3) } else { demo(0.4, 4.0 + i as f64 * 0.3) })
            .collect();
        let refs: Vec<&Trajectory> = demos.iter().collect();
        let dynm = DynamicsModel::point_mass(0.1).unwrap();
        let fs = FeatureSet::LqrQuadratic;
        let opts = PriorOptions::default();
        let knn = fit_pirl_knn(&refs, &fs, &dynm, &irl(), &opts).unwrap();
        let StyleVariant::Knn(index) = &knn.variant else { panic!() };
        for (i, d) in demos.iter().enumerate() {
            let got = infer_theta(&knn, &d.prefix(10).unwrap(), &fs, 3).unwrap();
            assert_eq!(got, index.entries()[i].theta);
        }
        let gmm = fit_pirl_gmm(&refs, &fs, &dynm, 2, &irl(), 0, &opts).unwrap();
        let StyleVariant::Gmm(g) = &gmm.variant else { panic!() };
        for d in &demos {
            let window = d.prefix(10).unwrap();
            let j = gmm.assign(&window).unwrap().unwrap();
            assert_eq!(infer_theta(&gmm, &window, &fs, 1).unwrap(), g.thetas[j]);
        }
    }
}

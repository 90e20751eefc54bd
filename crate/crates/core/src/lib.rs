//! Learning distributions of cost functions from unlabeled mixtures of
//! continuous trajectory demonstrations, and predicting behaviour under them.
//!
//! The pipeline has two stages. First a prior over cost weights is trained:
//! a single cost for every demonstration ([`priors::fit_tirl`]), a Gaussian
//! mixture over trajectory features with one cost per component
//! ([`priors::fit_pirl_gmm`]), or a nearest-neighbour index of
//! per-demonstration costs ([`priors::fit_pirl_knn`]). Each cost is fitted by
//! maximum-entropy IRL with a Laplace approximation ([`irl::fit`]). Then, for
//! a new agent, the cost is inferred from a short observation window and
//! its future is predicted by MPC ([`predict::predict_rollout`]).
//!
//! ```
//! use pirl::prelude::*;
//!
//! let model = DynamicsModel::point_mass(0.1).unwrap();
//! let demo = lqr_solve(
//!     &LqrParams { q: 4.0, r: 1.0, horizon: 50, dt: 0.1 },
//!     &State::new(vec![6.0, 0.0]).unwrap(),
//! )
//! .unwrap();
//! let irl = IrlConfig { beta: 100.0, ..IrlConfig::default() };
//! let fit = pirl::irl::fit(&[&demo], &FeatureSet::LqrQuadratic, &model, &irl).unwrap();
//! assert!((fit.theta.ratio() - 4.0).abs() < 0.4);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod irl;
pub mod predict;
pub mod priors;
pub mod synth;
pub mod types;

pub use error::{Error, Result};

/// The types most programs need.
pub mod prelude {
    pub use crate::dataset::{split_dataset, Dataset};
    pub use crate::dynamics::{lqr_cost, lqr_solve, DynamicsModel, LqrParams};
    pub use crate::error::{Error, Result};
    pub use crate::eval::{k_sweep, med, run_comparison, EvalConfig, EvalReport, KSweepReport, Method};
    pub use crate::features::{FeatureConfig, FeatureSet, ReferencePath, SdTrajectory};
    pub use crate::irl::{IrlConfig, IrlResult};
    pub use crate::predict::{infer_theta, mpc_predict, predict_rollout, MpcConfig, OnlineConfig};
    pub use crate::priors::{PriorOptions, StyleModel, StyleVariant};
    pub use crate::synth::{generate_dataset, SynthConfig, ThetaSamplerConfig};
    pub use crate::types::{Action, CostWeights, FeatureVector, State, Trajectory};
}

//! Trajectory prediction: MPC under a cost, and cost inference from a
//! window of observations.

mod mpc;
mod online;

pub use mpc::{mpc_predict, mpc_solve, MpcConfig, MpcInit, MpcSolution};
pub use online::{infer_theta, predict_rollout, OnlineConfig};

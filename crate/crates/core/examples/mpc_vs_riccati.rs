//! Solves the same quadratic cost two ways: the finite-horizon Riccati
//! recursion and the generic MPC trajectory optimizer. With quadratic
//! features they agree to solver precision; with action bounds the MPC
//! solution saturates instead.
//!
//! Run with `cargo run --release --example mpc_vs_riccati`.

use pirl::predict::mpc_solve;
use pirl::prelude::*;

fn max_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states()
        .iter()
        .zip(b.states())
        .flat_map(|(x, y)| x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn main() -> pirl::Result<()> {
    let (dt, horizon) = (0.1, 50);
    let model = DynamicsModel::point_mass(dt)?;
    let x0 = State::new(vec![8.0, -1.0])?;

    println!("{:>8} {:>12} {:>12} {:>8} {:>14}", "ratio", "LQR cost", "MPC cost", "iters", "max |Δx|");
    for q in [0.1, 0.4, 1.0, 4.0, 10.0] {
        let oracle = lqr_solve(&LqrParams { q, r: 1.0, horizon, dt }, &x0)?;
        let cfg = MpcConfig { horizon, ..MpcConfig::default() };
        let sol = mpc_solve(&CostWeights::from_ratio(q)?, &FeatureSet::LqrQuadratic, &model, &x0, &cfg)?;
        println!(
            "{q:>8.1} {:>12.5} {:>12.5} {:>8} {:>14.2e}",
            lqr_cost(&oracle, q, 1.0),
            lqr_cost(&sol.trajectory, q, 1.0),
            sol.iterations,
            max_gap(&sol.trajectory, &oracle)
        );
    }

    let bounded = MpcConfig {
        horizon,
        action_bounds: Some(vec![[-2.0, 2.0]]),
        ..MpcConfig::default()
    };
    let sol = mpc_solve(&CostWeights::from_ratio(4.0)?, &FeatureSet::LqrQuadratic, &model, &x0, &bounded)?;
    let peak = sol.trajectory.actions().iter().map(|u| u.as_slice()[0].abs()).fold(0.0, f64::max);
    let free = lqr_solve(&LqrParams { q: 4.0, r: 1.0, horizon, dt }, &x0)?;
    let free_peak = free.actions().iter().map(|u| u.as_slice()[0].abs()).fold(0.0, f64::max);
    println!("ratio 4 with |u| <= 2: peak action {peak:.3} (unbounded {free_peak:.3})");
    Ok(())
}

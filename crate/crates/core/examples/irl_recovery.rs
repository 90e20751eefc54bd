//! Recovers cost weights from LQR-optimal demonstrations by maximum
//! entropy IRL under the Laplace approximation. Prints the recovered
//! state-to-effort ratio for several generating ratios and rationality
//! values, then the objective along a grid of ratios for one demonstration.
//!
//! Run with `cargo run --release --example irl_recovery`.

use pirl::irl::laplace_objective;
use pirl::prelude::*;

fn main() -> pirl::Result<()> {
    let (dt, horizon) = (0.1, 50);
    let model = DynamicsModel::point_mass(dt)?;
    let fs = FeatureSet::LqrQuadratic;
    let starts = [[6.0, 0.0], [-4.0, 1.5], [9.0, -2.0]];

    println!("{:>6} {:>8} {:>12} {:>12}", "ratio", "beta", "one demo", "three demos");
    for q in [0.4, 1.0, 4.0, 8.0] {
        let demos = starts
            .iter()
            .map(|x0| lqr_solve(&LqrParams { q, r: 1.0, horizon, dt }, &State::new(x0.to_vec())?))
            .collect::<pirl::Result<Vec<_>>>()?;
        let refs: Vec<&Trajectory> = demos.iter().collect();
        for beta in [10.0, 100.0, 1000.0] {
            let irl = IrlConfig { beta, ..IrlConfig::default() };
            let single = pirl::irl::fit(&refs[..1], &fs, &model, &irl)?;
            let pooled = pirl::irl::fit(&refs, &fs, &model, &irl)?;
            println!(
                "{q:>6.1} {beta:>8.0} {:>12.4} {:>12.4}",
                single.theta.ratio(),
                pooled.theta.ratio()
            );
        }
    }

    let demo = lqr_solve(&LqrParams { q: 4.0, r: 1.0, horizon, dt }, &State::new(vec![6.0, 0.0])?)?;
    let irl = IrlConfig { beta: 100.0, ..IrlConfig::default() };
    println!("objective for a ratio-4 demonstration:");
    for ratio in [1.0, 2.0, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0, 8.0] {
        let value = laplace_objective(&CostWeights::from_ratio(ratio)?, &[&demo], &fs, &model, &irl)?;
        println!("  ratio {ratio:>4.1}  {value:>12.5}");
    }
    Ok(())
}

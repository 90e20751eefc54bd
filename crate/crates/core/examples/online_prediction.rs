//! Predicts a new agent's future from a short observation window. The
//! nearest-neighbour prior infers a cost from the first steps, MPC rolls the
//! agent forward under it, and the prediction is scored against the held
//! out continuation. Also shows periodic re-inference during the rollout.
//! The prior is indexed by the leading window of each training
//! demonstration, so windows taken later in a rollout, where the agent has
//! mostly settled, resemble calm starts and pull the inferred cost away.
//!
//! Run with `cargo run --release --example online_prediction [n] [seed]`.

use pirl::priors::train_pirl_knn;
use pirl::prelude::*;

fn main() -> pirl::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(500, |a| a.parse().expect("n"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let synth = SynthConfig { n_trajectories: n, ..SynthConfig::default() };
    let data = generate_dataset(&ThetaSamplerConfig::two_kernel(seed), &synth)?;
    let dynamics = DynamicsModel::point_mass(synth.dt)?;
    let fs = FeatureSet::LqrQuadratic;
    let cfg = EvalConfig { seed, ..EvalConfig::default() };
    let model = train_pirl_knn(&data, &fs, &dynamics, &cfg.irl, &cfg.prior)?;

    let t_prime = cfg.online.t_prime;
    let labels = data.labels().expect("synthetic data is labelled");
    println!("{:>6} {:>8} {:>10} {:>12} {:>12}", "test", "ratio", "inferred", "MED once", "MED every 5");
    for &i in data.test_indices().iter().take(8) {
        let demo = &data.demonstrations()[i];
        let observed = demo.prefix(t_prime)?;
        let future = demo.window(t_prime, demo.len())?;
        let theta = infer_theta(&model, &observed, &fs, 1)?;
        let mpc = MpcConfig { horizon: future.len(), ..MpcConfig::default() };
        let once = predict_rollout(&model, &observed, &OnlineConfig { k_query: 1, ..cfg.online }, &mpc, &fs, &dynamics)?;
        let every = OnlineConfig { k_query: 1, reinfer_every: Some(5), ..cfg.online };
        let replanned = predict_rollout(&model, &observed, &every, &mpc, &fs, &dynamics)?;
        println!(
            "{i:>6} {:>8.3} {:>10.3} {:>12.3e} {:>12.3e}",
            labels[i],
            theta.ratio(),
            med(&future, &once)?,
            med(&future, &replanned)?
        );
    }
    Ok(())
}

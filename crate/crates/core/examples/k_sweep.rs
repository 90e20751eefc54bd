//! Prediction error of the nearest-neighbour prior as the neighbour count
//! grows, on clean and on position-noised synthetic demonstrations.
//!
//! Run with `cargo run --release --example k_sweep [n] [seed]`.

use pirl::eval::KSweepReport;
use pirl::prelude::*;
use pirl::synth::add_position_noise;

fn print(title: &str, r: &KSweepReport) {
    println!("{title} (Spearman {:.3})", r.spearman());
    for ((k, m), s) in r.ks.iter().zip(&r.med_mean).zip(&r.med_std) {
        println!("  k = {k:>3}  MED {m:.3e} ± {s:.3e}");
    }
}

fn main() -> pirl::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |a| a.parse().expect("n"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let synth = SynthConfig { n_trajectories: n, ..SynthConfig::default() };
    let data = generate_dataset(&ThetaSamplerConfig::two_kernel(seed), &synth)?;
    let model = DynamicsModel::point_mass(synth.dt)?;
    let cfg = EvalConfig { seed, ..EvalConfig::default() };
    let ks = [1, 5, 10, 20, 50];

    let clean = k_sweep(&data, &ks, &FeatureSet::LqrQuadratic, &model, &cfg)?;
    print("clean demonstrations", &clean);

    let noisy = add_position_noise(&data, 0.3, seed)?;
    let noisy = k_sweep(&noisy, &ks, &FeatureSet::LqrQuadratic, &model, &cfg)?;
    print("position noise 0.3 m", &noisy);
    Ok(())
}

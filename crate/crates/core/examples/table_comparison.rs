//! Compares the single-cost, mixture and nearest-neighbour priors on the
//! synthetic LQR benchmark: 2000 demonstrations whose state-to-effort ratio
//! comes from two Gaussian kernels, 1800 for training and 200 for testing.
//!
//! Run with `cargo run --release --example table_comparison [n] [seed]`.

use std::time::Instant;

use pirl::prelude::*;

fn main() -> pirl::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |a| a.parse().expect("n"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let synth = SynthConfig { n_trajectories: n, ..SynthConfig::default() };
    let data = generate_dataset(&ThetaSamplerConfig::two_kernel(seed), &synth)?;
    let model = DynamicsModel::point_mass(synth.dt)?;
    let cfg = EvalConfig { seed, ..EvalConfig::default() };
    let methods = [Method::Tirl, Method::PirlGmm { k: 2 }, Method::PirlKnn { k: 1 }];

    let start = Instant::now();
    let report = run_comparison(&data, &methods, &FeatureSet::LqrQuadratic, &model, &cfg)?;
    println!("{} train / {} test, {:.1?}", report.n_train, report.n_test, start.elapsed());
    println!("{:<18} {:>12} {:>12} {:>9}", "method", "MED mean", "MED std", "failures");
    for m in &report.per_method {
        println!("{:<18} {:>12.3e} {:>12.3e} {:>9}", m.label, m.med_mean, m.med_std, m.failures.len());
    }
    Ok(())
}

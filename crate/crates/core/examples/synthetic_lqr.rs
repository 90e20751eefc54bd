//! Generates the synthetic LQR benchmark: point-mass demonstrations whose
//! state-to-effort ratio is drawn from two Gaussian kernels. Prints a
//! summary of the draws and one demonstration, and optionally writes the
//! dataset to a directory as CSV plus a JSON manifest.
//!
//! Run with `cargo run --release --example synthetic_lqr [n] [seed] [out_dir]`.

use std::path::Path;

use pirl::dynamics::validate_trajectory;
use pirl::eval::mean_std;
use pirl::io::{load_dataset, save_dataset};
use pirl::prelude::*;
use pirl::synth::generate_labeled_dataset;

fn main() -> pirl::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |a| a.parse().expect("n"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));
    let out = args.next();

    let sampler = ThetaSamplerConfig::two_kernel(seed);
    let synth = SynthConfig { n_trajectories: n, ..SynthConfig::default() };
    let (data, kernels) = generate_labeled_dataset(&sampler, &synth)?;
    let ratios = data.labels().expect("synthetic data is labelled");
    println!(
        "{} demonstrations of {} steps, dt {} s ({} train / {} test)",
        data.len(),
        synth.horizon,
        synth.dt,
        data.train_indices().len(),
        data.test_indices().len()
    );
    for (j, kernel) in sampler.kernels.iter().enumerate() {
        let drawn: Vec<f64> = ratios.iter().zip(&kernels).filter(|(_, k)| **k == j).map(|(r, _)| *r).collect();
        let (mean, std) = mean_std(&drawn);
        println!(
            "kernel {j}: N({}, {}), {} draws, ratio {mean:.3} ± {std:.3}",
            kernel.mu,
            kernel.sigma,
            drawn.len()
        );
    }

    let model = DynamicsModel::point_mass(synth.dt)?;
    let mut consistent = 0;
    for t in data.demonstrations() {
        consistent += usize::from(validate_trajectory(t, &model, 1e-9)?);
    }
    println!("{consistent}/{} demonstrations follow the dynamics to 1e-9", data.len());

    let first = &data.demonstrations()[0];
    println!("demonstration 0 (ratio {:.3}):", ratios[0]);
    for (i, (x, u)) in first.states().iter().zip(first.actions()).enumerate().step_by(10) {
        println!(
            "  t = {:>4.1}  p = {:>8.4}  v = {:>8.4}  u = {:>8.4}",
            i as f64 * synth.dt,
            x.as_slice()[0],
            x.as_slice()[1],
            u.as_slice()[0]
        );
    }

    if let Some(dir) = out {
        let dir = Path::new(&dir);
        let generator = serde_json::json!({ "sampler": sampler, "synth": synth });
        save_dataset(dir, &data, Some(generator))?;
        let back = load_dataset(dir, None)?;
        println!("wrote {}; reloaded {} demonstrations", dir.display(), back.len());
    }
    Ok(())
}

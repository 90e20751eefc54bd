//! Persists a trained prior and recorded tracks. A mixture prior is saved
//! as a versioned JSON archive and reloaded; predictions from the reloaded
//! model match the original exactly. Demonstrations are written as track
//! CSV and read back.
//!
//! Run with `cargo run --release --example model_archive [out_dir]`.

use std::path::PathBuf;

use pirl::io::{load_model, load_tracks, save_model, save_trajectories, ModelArchive};
use pirl::priors::train_pirl_gmm;
use pirl::prelude::*;

fn main() -> pirl::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("pirl_archive"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;

    let seed = 5;
    let synth = SynthConfig { n_trajectories: 300, ..SynthConfig::default() };
    let data = generate_dataset(&ThetaSamplerConfig::two_kernel(seed), &synth)?;
    let dynamics = DynamicsModel::point_mass(synth.dt)?;
    let fs = FeatureSet::LqrQuadratic;
    let cfg = EvalConfig { seed, ..EvalConfig::default() };
    let model = train_pirl_gmm(&data, &fs, &dynamics, 2, &cfg.irl, seed, &cfg.prior)?;

    let model_path = dir.join("gmm.json");
    save_model(&model_path, &ModelArchive::new(model.clone(), seed, &cfg)?)?;
    let archive = load_model(&model_path)?;
    println!(
        "archive {} (format {}, seed {}): {} with {} costs",
        model_path.display(),
        archive.format_version,
        archive.seed,
        archive.model.method_name(),
        archive.model.thetas().len()
    );

    let mut identical = 0;
    let test = data.test_demos();
    for demo in &test {
        let observed = demo.prefix(cfg.online.t_prime)?;
        let mpc = MpcConfig { horizon: 20, ..MpcConfig::default() };
        let a = predict_rollout(&model, &observed, &cfg.online, &mpc, &fs, &dynamics)?;
        let b = predict_rollout(&archive.model, &observed, &cfg.online, &mpc, &fs, &dynamics)?;
        identical += usize::from(a == b);
    }
    println!("{identical}/{} predictions identical after reload", test.len());

    let tracks_path = dir.join("tracks.csv");
    let ids: Vec<String> = (0..test.len()).map(|i| format!("car{i}")).collect();
    let owned: Vec<Trajectory> = test.iter().map(|t| (*t).clone()).collect();
    save_trajectories(&tracks_path, &ids, &owned)?;
    let tracks = load_tracks(&tracks_path)?;
    let back = tracks[0].to_trajectory(None)?;
    let gap = back
        .states()
        .iter()
        .zip(owned[0].states())
        .flat_map(|(x, y)| x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    println!(
        "{} tracks in {}; track {} has {} frames at dt {} s, max state gap {gap:.1e}",
        tracks.len(),
        tracks_path.display(),
        tracks[0].id,
        tracks[0].len(),
        tracks[0].dt
    );
    Ok(())
}

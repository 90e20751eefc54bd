//! Clusters unlabeled demonstrations by their observation-window features
//! with a Gaussian mixture and fits one cost per cluster. Compares the
//! clusters with the generating kernels and prints the EM log-likelihood
//! trace of the feature mixture.
//!
//! Run with `cargo run --release --example style_clustering [n] [seed] [k]`.

use pirl::eval::cluster_report;
use pirl::priors::{gmm_fit_traced, prior_features, train_pirl_gmm, Standardizer};
use pirl::prelude::*;
use pirl::synth::generate_labeled_dataset;

fn main() -> pirl::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(2000, |a| a.parse().expect("n"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));
    let k: usize = args.next().map_or(2, |a| a.parse().expect("k"));

    let synth = SynthConfig { n_trajectories: n, ..SynthConfig::default() };
    let (data, kernels) = generate_labeled_dataset(&ThetaSamplerConfig::two_kernel(seed), &synth)?;
    let dynamics = DynamicsModel::point_mass(synth.dt)?;
    let fs = FeatureSet::LqrQuadratic;
    let cfg = EvalConfig { seed, ..EvalConfig::default() };

    let model = train_pirl_gmm(&data, &fs, &dynamics, k, &cfg.irl, seed, &cfg.prior)?;
    let report = cluster_report(&model, &data)?;
    for c in &report.clusters {
        let from: Vec<usize> = (0..2)
            .map(|j| report.assignments.iter().zip(&kernels).filter(|(a, l)| **a == c.component && **l == j).count())
            .collect();
        println!(
            "component {}: weight {:.3}, ratio {:.3}, {} members ({} from kernel 0, {} from kernel 1)",
            c.component,
            c.weight,
            c.theta.ratio(),
            c.members,
            from[0],
            from[1]
        );
    }

    let demos = data.train_demos();
    let raw = prior_features(&demos, &fs, cfg.prior.feature_window)?;
    let st = Standardizer::fit(&raw)?;
    let features = raw.iter().map(|f| st.apply(f)).collect::<pirl::Result<Vec<_>>>()?;
    let fit = gmm_fit_traced(&features, k, seed, &cfg.prior.gmm)?;
    let trace = &fit.log_likelihood_trace;
    println!(
        "EM: {} iterations, converged {}, mean log-likelihood {:.5} -> {:.5}",
        trace.len(),
        fit.converged,
        trace.first().copied().unwrap_or(f64::NAN),
        trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

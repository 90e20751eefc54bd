//! Synthetic longitudinal driving: vehicles follow a winding reference path
//! under two cost styles over speed tracking, acceleration and jerk. The
//! three priors are trained on path-frame demonstrations and compared by
//! prediction error.
//!
//! Run with `cargo run --release --example driving_styles [seed]`.

use pirl::prelude::*;
use pirl::synth::{generate_driving_corpus, DrivingCorpusConfig};

fn main() -> pirl::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(3, |a| a.parse().expect("seed"));
    let corpus = generate_driving_corpus(&DrivingCorpusConfig { seed, ..DrivingCorpusConfig::default() })?;
    let data = &corpus.dataset;
    println!(
        "{} demonstrations of {} steps ({} train / {} test)",
        data.len(),
        data.demonstrations()[0].len(),
        data.train_indices().len(),
        data.test_indices().len()
    );

    let cfg = EvalConfig { seed, ..EvalConfig::default() };
    let methods = [Method::Tirl, Method::PirlGmm { k: 2 }, Method::PirlKnn { k: 3 }];
    let report = run_comparison(data, &methods, &corpus.feature_set, &corpus.model, &cfg)?;
    for m in &report.per_method {
        println!("{:<18} MED {:.3e} ± {:.3e}  ({} failures)", m.label, m.med_mean, m.med_std, m.failures.len());
        if let Some(f) = m.failures.first() {
            println!("  first failure (test trajectory {}): {}", f.index, f.message);
        }
    }
    Ok(())
}

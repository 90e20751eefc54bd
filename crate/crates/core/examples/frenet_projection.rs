//! Path-relative coordinates and the longitudinal driving features. A car
//! drives along a winding reference path with a small lateral offset; its
//! Cartesian positions are projected back to arclength and offset, and the
//! speed-tracking, acceleration and jerk features are computed from the
//! recovered arclength profile.
//!
//! Run with `cargo run --release --example frenet_projection`.

use pirl::features::{desired_velocity, driving_features, frenet_project, kinematic_profile, DesiredVelocityFormula};
use pirl::prelude::*;

fn main() -> pirl::Result<()> {
    let peak = 0.02;
    let path = ReferencePath::from_curvature_profile([0.0, 0.0], 0.0, 1.0, 300, |s| {
        peak * (2.0 * std::f64::consts::PI * s / 150.0).sin()
    })?;
    println!("path: {} waypoints, {:.1} m long", path.waypoints().len(), path.length());

    let dt = 0.2;
    let s_true: Vec<f64> = (0..60).map(|i| 10.0 + 8.0 * i as f64 * dt + 0.05 * (i as f64 * dt).powi(2)).collect();
    let d_true: Vec<f64> = (0..60).map(|i| 0.5 * (0.3 * i as f64 * dt).sin()).collect();
    let xy: Vec<[f64; 2]> = s_true.iter().zip(&d_true).map(|(s, d)| path.point_at(*s, *d)).collect();

    let sd = frenet_project(&path, &xy, dt)?;
    let s_err = sd.s().iter().zip(&s_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let d_err = sd.d().iter().zip(&d_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("round trip through Cartesian coordinates: max |Δs| {s_err:.2e} m, max |Δd| {d_err:.2e} m");

    let profile = kinematic_profile(&sd)?;
    println!("{:>6} {:>8} {:>8} {:>9} {:>8} {:>8}", "t", "s", "d", "kappa", "v", "a");
    for i in (0..sd.len()).step_by(10) {
        println!(
            "{:>6.1} {:>8.2} {:>8.3} {:>9.5} {:>8.3} {:>8.3}",
            i as f64 * dt,
            sd.s()[i],
            sd.d()[i],
            path.curvature_at(sd.s()[i]).value,
            profile.v[i],
            profile.a[i]
        );
    }

    for formula in [DesiredVelocityFormula::PaperVerbatim, DesiredVelocityFormula::InverseCurvature] {
        let config = FeatureConfig { desired_velocity_formula: formula, ..FeatureConfig::default() };
        let kappa = path.curvature_at(sd.s()[30]).value;
        let f = driving_features(&sd, &path, &config)?;
        println!(
            "{formula:?}: desired speed at t = 6 s {:.3} m/s, features {:.4?}",
            desired_velocity(kappa, &config).value,
            f.as_slice()
        );
    }
    Ok(())
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::path::SdTrajectory;

/// Longitudinal velocity, acceleration and jerk per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicProfile {
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub j: Vec<f64>,
}

/// Central differences inside, first-order one-sided differences at the ends.
pub(crate) fn differentiate(values: &[f64], dt: f64, out: &mut Vec<f64>) {
    let n = values.len();
    out.clear();
    out.reserve(n);
    out.push((values[1] - values[0]) / dt);
    for i in 1..n - 1 {
        out.push((values[i + 1] - values[i - 1]) / (2.0 * dt));
    }
    out.push((values[n - 1] - values[n - 2]) / dt);
}

pub(crate) const MIN_PROFILE_SAMPLES: usize = 4;

pub(crate) fn profile_raw(s: &[f64], dt: f64) -> KinematicProfile {
    let mut v = Vec::new();
    let mut a = Vec::new();
    let mut j = Vec::new();
    differentiate(s, dt, &mut v);
    differentiate(&v, dt, &mut a);
    differentiate(&a, dt, &mut j);
    KinematicProfile { v, a, j }
}

/// Velocity, acceleration and jerk along the path by repeated finite
/// differencing of `s`. Needs at least four samples.
pub fn kinematic_profile(sd: &SdTrajectory) -> Result<KinematicProfile> {
    if sd.len() < MIN_PROFILE_SAMPLES {
        return Err(Error::TooShort {
            context: "kinematic profile".into(),
            needed: MIN_PROFILE_SAMPLES,
            found: sd.len(),
        });
    }
    Ok(profile_raw(sd.s(), sd.dt()))
}

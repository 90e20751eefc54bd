//! Longitudinal driving features: squared deviation from a curvature
//! dependent desired speed, squared acceleration and squared jerk, each
//! averaged over the samples of a trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::kinematics::{profile_raw, MIN_PROFILE_SAMPLES};
use crate::features::path::{ReferencePath, SdTrajectory};
use crate::types::FeatureVector;

const KAPPA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesiredVelocityFormula {
    /// `sqrt(a_desire · κ)`.
    PaperVerbatim,
    /// `min(sqrt(a_desire / max(κ, 1e-6)), v_cap)`, the lateral
    /// acceleration limited curve speed.
    InverseCurvature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub a_desire: f64,
    pub desired_velocity_formula: DesiredVelocityFormula,
    pub v_cap: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            a_desire: 1.8,
            desired_velocity_formula: DesiredVelocityFormula::PaperVerbatim,
            v_cap: 15.0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_desire > 0.0 && self.a_desire.is_finite()) {
            return Err(Error::invalid("a_desire must be positive"));
        }
        if !(self.v_cap > 0.0 && self.v_cap.is_finite()) {
            return Err(Error::invalid("v_cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredVelocity {
    pub value: f64,
    /// Set when a negative curvature was replaced by its magnitude.
    pub negative_curvature: bool,
}

pub fn desired_velocity(kappa: f64, config: &FeatureConfig) -> DesiredVelocity {
    let negative_curvature = kappa < 0.0;
    DesiredVelocity {
        value: desired_speed(kappa.abs(), config),
        negative_curvature,
    }
}

fn desired_speed(kappa: f64, config: &FeatureConfig) -> f64 {
    match config.desired_velocity_formula {
        DesiredVelocityFormula::PaperVerbatim => (config.a_desire * kappa).sqrt(),
        DesiredVelocityFormula::InverseCurvature => {
            (config.a_desire / kappa.max(KAPPA_FLOOR)).sqrt().min(config.v_cap)
        }
    }
}

/// Per-sample residuals whose mean squares are the three features.
pub(crate) fn driving_residuals_raw(
    s: &[f64],
    dt: f64,
    path: &ReferencePath,
    config: &FeatureConfig,
) -> [Vec<f64>; 3] {
    let p = profile_raw(s, dt);
    let tracking = s
        .iter()
        .zip(&p.v)
        .map(|(si, vi)| vi - desired_speed(path.abs_curvature_unflagged(*si), config))
        .collect();
    [tracking, p.a, p.j]
}

pub(crate) fn driving_features_raw(
    s: &[f64],
    dt: f64,
    path: &ReferencePath,
    config: &FeatureConfig,
) -> [f64; 3] {
    let n = s.len() as f64;
    driving_residuals_raw(s, dt, path, config).map(|r| r.iter().map(|v| v * v).sum::<f64>() / n)
}

/// `[f₁, f₂, f₃]` for a path-frame trajectory. The desired speed at each
/// sample uses the curvature magnitude at that sample's `s`.
pub fn driving_features(
    sd: &SdTrajectory,
    path: &ReferencePath,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    config.validate()?;
    if sd.len() < MIN_PROFILE_SAMPLES {
        return Err(Error::TooShort {
            context: "driving features".into(),
            needed: MIN_PROFILE_SAMPLES,
            found: sd.len(),
        });
    }
    FeatureVector::new(driving_features_raw(sd.s(), sd.dt(), path, config).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(formula: DesiredVelocityFormula) -> FeatureConfig {
        FeatureConfig {
            desired_velocity_formula: formula,
            ..FeatureConfig::default()
        }
    }

    #[test]
    fn desired_velocity_examples() {
        let verbatim = cfg(DesiredVelocityFormula::PaperVerbatim);
        assert!((desired_velocity(0.2, &verbatim).value - 0.6).abs() < 1e-12);
        assert_eq!(desired_velocity(0.0, &verbatim).value, 0.0);
        let inv = cfg(DesiredVelocityFormula::InverseCurvature);
        assert!((desired_velocity(0.2, &inv).value - 3.0).abs() < 1e-12);
        assert_eq!(desired_velocity(0.0, &inv).value, 15.0);
        let neg = desired_velocity(-0.2, &verbatim);
        assert!(neg.negative_curvature);
        assert!((neg.value - 0.6).abs() < 1e-12);
    }

    #[test]
    fn perfect_tracking_on_circle() {
        let path = ReferencePath::circle_arc(25.0, 1.0, 3.0).unwrap();
        let c = cfg(DesiredVelocityFormula::PaperVerbatim);
        let v = desired_velocity(1.0 / 25.0, &c).value;
        let s: Vec<f64> = (0..40).map(|i| 1.0 + v * 0.2 * i as f64).collect();
        let f = driving_features(&SdTrajectory::on_path(s, 0.2).unwrap(), &path, &c).unwrap();
        assert!(f.as_slice().iter().all(|x| x.abs() < 1e-12), "{f:?}");
    }

    #[test]
    fn constant_speed_on_straight() {
        let path = ReferencePath::new((0..=100).map(|i| [i as f64, 0.0]).collect()).unwrap();
        let c = cfg(DesiredVelocityFormula::PaperVerbatim);
        let s: Vec<f64> = (0..30).map(|i| 7.0 * 0.1 * i as f64).collect();
        let f = driving_features(&SdTrajectory::on_path(s, 0.1).unwrap(), &path, &c).unwrap();
        assert!((f.as_slice()[0] - 49.0).abs() < 1e-9);
        assert!(f.as_slice()[1].abs() < 1e-18);
        assert!(f.as_slice()[2].abs() < 1e-18);
    }

    #[test]
    fn sinusoidal_speed_acceleration_energy() {
        let path = ReferencePath::new((0..=400).map(|i| [i as f64, 0.0]).collect()).unwrap();
        let c = cfg(DesiredVelocityFormula::PaperVerbatim);
        let dt = 0.05;
        let n = (10.0 * std::f64::consts::PI / dt) as usize;
        let s: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                5.0 * t - t.cos() + 1.0
            })
            .collect();
        let f = driving_features(&SdTrajectory::on_path(s, dt).unwrap(), &path, &c).unwrap();
        assert!((f.as_slice()[1] - 0.5).abs() < 0.05, "{}", f.as_slice()[1]);
    }

    #[test]
    fn translation_invariance() {
        let path = ReferencePath::circle_arc(18.0, 1.0, 2.5).unwrap();
        let moved = ReferencePath::new(
            path.waypoints().iter().map(|p| [p[0] - 300.0, p[1] + 70.0]).collect(),
        )
        .unwrap();
        let c = cfg(DesiredVelocityFormula::InverseCurvature);
        let xy: Vec<[f64; 2]> = (0..25)
            .map(|i| {
                let phi = 0.1 + 0.02 * i as f64 + 0.001 * (i * i) as f64;
                [18.2 * phi.cos(), 18.2 * phi.sin()]
            })
            .collect();
        let xy_moved: Vec<[f64; 2]> = xy.iter().map(|p| [p[0] - 300.0, p[1] + 70.0]).collect();
        let a = driving_features(&path.project(&xy, 0.2, 10.0).unwrap(), &path, &c).unwrap();
        let b = driving_features(&moved.project(&xy_moved, 0.2, 10.0).unwrap(), &moved, &c).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn short_input_errors() {
        let path = ReferencePath::circle_arc(18.0, 1.0, 2.5).unwrap();
        let sd = SdTrajectory::on_path(vec![0.0, 1.0, 2.0], 0.1).unwrap();
        assert!(driving_features(&sd, &path, &FeatureConfig::default()).is_err());
    }
}

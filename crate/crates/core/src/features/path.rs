//! Polyline reference paths with arclength and curvature tables, and the
//! projection of Cartesian points onto path coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width of the band around the path in which points are
/// accepted by [`ReferencePath::project`].
pub const DEFAULT_CORRIDOR: f64 = 10.0;

/// An ordered polyline with precomputed arclength and signed curvature per
/// waypoint (left turns positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathWaypoints", into = "PathWaypoints")]
pub struct ReferencePath {
    waypoints: Vec<[f64; 2]>,
    arclength: Vec<f64>,
    curvature: Vec<f64>,
    /// Unit left normals at the waypoints; interior ones bisect the
    /// adjacent segment normals so the frame varies continuously.
    normals: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct PathWaypoints {
    waypoints: Vec<[f64; 2]>,
}

impl TryFrom<PathWaypoints> for ReferencePath {
    type Error = Error;
    fn try_from(p: PathWaypoints) -> Result<Self> {
        ReferencePath::new(p.waypoints)
    }
}

impl From<ReferencePath> for PathWaypoints {
    fn from(p: ReferencePath) -> Self {
        PathWaypoints { waypoints: p.waypoints }
    }
}

/// Curvature of the circle through three points, signed by turn direction.
fn circumscribed_curvature(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let ab = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let bc = ((c[0] - b[0]).powi(2) + (c[1] - b[1]).powi(2)).sqrt();
    let ca = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let denom = ab * bc * ca;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * cross / denom
    }
}

/// A curvature lookup; `clamped` is set when `s` fell outside the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub value: f64,
    pub clamped: bool,
}

/// Path coordinates of a sampled trajectory: travelled arclength `s` and
/// signed lateral offset `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdTrajectory {
    s: Vec<f64>,
    d: Vec<f64>,
    dt: f64,
}

/// Backward motion smaller than this is treated as numerical noise.
const S_MONOTONE_TOL: f64 = 1e-6;

impl SdTrajectory {
    pub fn new(s: Vec<f64>, d: Vec<f64>, dt: f64) -> Result<Self> {
        if s.len() != d.len() {
            return Err(Error::dims("sd trajectory lateral offsets", s.len(), d.len()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if s.iter().chain(&d).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sd trajectory".into()));
        }
        if let Some(i) = s.windows(2).position(|w| w[1] < w[0] - S_MONOTONE_TOL) {
            return Err(Error::invalid(format!(
                "travelled distance decreases between samples {i} and {}",
                i + 1
            )));
        }
        Ok(SdTrajectory { s, d, dt })
    }

    /// An on-path trajectory (`d = 0`) from arclength samples.
    pub fn on_path(s: Vec<f64>, dt: f64) -> Result<Self> {
        let d = vec![0.0; s.len()];
        SdTrajectory::new(s, d, dt)
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

impl ReferencePath {
    pub fn new(waypoints: Vec<[f64; 2]>) -> Result<Self> {
        if waypoints.len() < 3 {
            return Err(Error::TooShort {
                context: "reference path".into(),
                needed: 3,
                found: waypoints.len(),
            });
        }
        if waypoints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reference path waypoints".into()));
        }
        let mut arclength = Vec::with_capacity(waypoints.len());
        arclength.push(0.0);
        for (i, w) in waypoints.windows(2).enumerate() {
            let len = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            if len <= 0.0 {
                return Err(Error::invalid(format!(
                    "waypoints {i} and {} coincide; arclength must strictly increase",
                    i + 1
                )));
            }
            arclength.push(arclength[i] + len);
        }
        let n = waypoints.len();
        let mut curvature = vec![0.0; n];
        for i in 1..n - 1 {
            curvature[i] = circumscribed_curvature(waypoints[i - 1], waypoints[i], waypoints[i + 1]);
        }
        curvature[0] = curvature[1];
        curvature[n - 1] = curvature[n - 2];
        let seg_normal = |i: usize| {
            let len = arclength[i + 1] - arclength[i];
            let a = waypoints[i];
            let b = waypoints[i + 1];
            [-(b[1] - a[1]) / len, (b[0] - a[0]) / len]
        };
        let mut normals = Vec::with_capacity(n);
        normals.push(seg_normal(0));
        for i in 1..n - 1 {
            let (l, r) = (seg_normal(i - 1), seg_normal(i));
            let sum = [l[0] + r[0], l[1] + r[1]];
            let norm = (sum[0] * sum[0] + sum[1] * sum[1]).sqrt();
            if norm < 1e-9 {
                return Err(Error::invalid(format!("path reverses direction at waypoint {i}")));
            }
            normals.push([sum[0] / norm, sum[1] / norm]);
        }
        normals.push(seg_normal(n - 2));
        Ok(ReferencePath {
            waypoints,
            arclength,
            curvature,
            normals,
        })
    }

    /// Integrates a heading profile: `n` segments of length `ds` starting at
    /// `start` with heading `heading`, turning at `kappa(s)` per metre.
    pub fn from_curvature_profile(
        start: [f64; 2],
        heading: f64,
        ds: f64,
        n: usize,
        kappa: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut pts = Vec::with_capacity(n + 1);
        let mut p = start;
        let mut h = heading;
        pts.push(p);
        for i in 0..n {
            let s_mid = (i as f64 + 0.5) * ds;
            let h_mid = h + 0.5 * ds * kappa(s_mid);
            p = [p[0] + ds * h_mid.cos(), p[1] + ds * h_mid.sin()];
            h += ds * kappa(s_mid);
            pts.push(p);
        }
        ReferencePath::new(pts)
    }

    /// Counter-clockwise arc of `radius` centred at the origin, sampled
    /// every `spacing` metres of arclength, starting at angle zero.
    pub fn circle_arc(radius: f64, spacing: f64, angle: f64) -> Result<Self> {
        let n = (radius * angle / spacing).round().max(2.0) as usize;
        let step = angle / n as f64;
        ReferencePath::new(
            (0..=n)
                .map(|i| {
                    let phi = i as f64 * step;
                    [radius * phi.cos(), radius * phi.sin()]
                })
                .collect(),
        )
    }

    pub fn waypoints(&self) -> &[[f64; 2]] {
        &self.waypoints
    }

    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    pub fn curvature_table(&self) -> &[f64] {
        &self.curvature
    }

    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap()
    }

    fn segment_index(&self, s: f64) -> usize {
        let idx = self.arclength.partition_point(|&a| a <= s);
        idx.saturating_sub(1).min(self.waypoints.len() - 2)
    }

    /// Signed curvature at `s`, linearly interpolated between waypoints.
    /// Out-of-range queries are clamped to the path ends.
    pub fn curvature_at(&self, s: f64) -> CurvatureSample {
        let total = self.length();
        let clamped = !(0.0..=total).contains(&s);
        let s = s.clamp(0.0, total);
        let i = self.segment_index(s);
        let (s0, s1) = (self.arclength[i], self.arclength[i + 1]);
        let t = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
        CurvatureSample {
            value: self.curvature[i] + t * (self.curvature[i + 1] - self.curvature[i]),
            clamped,
        }
    }

    pub(crate) fn abs_curvature_unflagged(&self, s: f64) -> f64 {
        self.curvature_at(s).value.abs()
    }

    fn frame(&self, i: usize, t: f64) -> ([f64; 2], [f64; 2]) {
        let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
        let (na, nb) = (self.normals[i], self.normals[i + 1]);
        let c = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        let n = [na[0] + t * (nb[0] - na[0]), na[1] + t * (nb[1] - na[1])];
        let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
        (c, [n[0] / norm, n[1] / norm])
    }

    /// Cartesian point at arclength `s` and signed lateral offset `d`
    /// (positive to the left).
    pub fn point_at(&self, s: f64, d: f64) -> [f64; 2] {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        let t = (s - self.arclength[i]) / (self.arclength[i + 1] - self.arclength[i]);
        let (c, n) = self.frame(i, t);
        [c[0] + d * n[0], c[1] + d * n[1]]
    }

    /// Path coordinates `(s, d)` of one point: the path position whose
    /// interpolated normal passes through `p`, nearest such position
    /// winning. Points beyond the ends fall back to the closest endpoint.
    pub fn locate(&self, p: [f64; 2]) -> (f64, f64) {
        let cross = |u: [f64; 2], v: [f64; 2]| u[0] * v[1] - u[1] * v[0];
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..self.waypoints.len() - 1 {
            let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
            let (na, nb) = (self.normals[i], self.normals[i + 1]);
            let e = [b[0] - a[0], b[1] - a[1]];
            let w = [p[0] - a[0], p[1] - a[1]];
            let dn = [nb[0] - na[0], nb[1] - na[1]];
            // cross(w − t·e, na + t·dn) = 0
            let qa = -cross(e, dn);
            let qb = cross(w, dn) - cross(e, na);
            let qc = cross(w, na);
            let mut roots = [f64::NAN; 2];
            if qa.abs() < 1e-14 * (qb.abs() + 1.0) {
                roots[0] = -qc / qb;
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    let q = -0.5 * (qb + qb.signum() * sq);
                    roots = [q / qa, qc / q];
                }
            }
            for t in roots {
                if !(-1e-12..=1.0 + 1e-12).contains(&t) {
                    continue;
                }
                let t = t.clamp(0.0, 1.0);
                let (c, n) = self.frame(i, t);
                let d = (p[0] - c[0]) * n[0] + (p[1] - c[1]) * n[1];
                if d.abs() < best.0 {
                    best = (d.abs(), self.arclength[i] + t * (self.arclength[i + 1] - self.arclength[i]), d);
                }
            }
        }
        if best.0.is_finite() {
            return (best.1, best.2);
        }
        let ends = [(0usize, 0.0), (self.waypoints.len() - 1, self.length())];
        let mut fallback = (f64::INFINITY, 0.0, 0.0);
        for (idx, s) in ends {
            let q = self.waypoints[idx];
            let n = self.normals[idx];
            let dist = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            if dist < fallback.0 {
                let lateral = (p[0] - q[0]) * n[0] + (p[1] - q[1]) * n[1];
                let signed = if lateral < 0.0 { -dist } else { dist };
                fallback = (dist, s, signed);
            }
        }
        (fallback.1, fallback.2)
    }

    /// Projects a Cartesian trajectory onto the path.
    ///
    /// Fails with [`Error::OutsideCorridor`] naming the first point farther
    /// than `corridor` metres from the path.
    pub fn project(&self, xy: &[[f64; 2]], dt: f64, corridor: f64) -> Result<SdTrajectory> {
        let mut s = Vec::with_capacity(xy.len());
        let mut d = Vec::with_capacity(xy.len());
        for (index, &p) in xy.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(Error::NonFinite(format!("point {index}")));
            }
            let (si, di) = self.locate(p);
            if di.abs() > corridor {
                return Err(Error::OutsideCorridor {
                    index,
                    distance: di.abs(),
                    corridor,
                });
            }
            s.push(si);
            d.push(di);
        }
        SdTrajectory::new(s, d, dt)
    }
}

/// Path coordinates of `xy` with the default corridor.
pub fn frenet_project(path: &ReferencePath, xy: &[[f64; 2]], dt: f64) -> Result<SdTrajectory> {
    path.project(xy, dt, DEFAULT_CORRIDOR)
}

/// Curvature of `path` at `s` (clamped; see [`CurvatureSample::clamped`]).
pub fn curvature_at(path: &ReferencePath, s: f64) -> CurvatureSample {
    path.curvature_at(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight() -> ReferencePath {
        ReferencePath::new((0..=10).map(|i| [i as f64, 0.0]).collect()).unwrap()
    }

    #[test]
    fn needs_three_distinct_waypoints() {
        assert!(ReferencePath::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(ReferencePath::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn on_path_points_project_to_waypoint_arclength() {
        let path = ReferencePath::circle_arc(15.0, 1.0, 1.5).unwrap();
        let sd = frenet_project(&path, path.waypoints(), 0.1).unwrap();
        for (s, a) in sd.s().iter().zip(path.arclength()) {
            assert!((s - a).abs() < 1e-9);
        }
        assert!(sd.d().iter().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn left_offset_is_positive() {
        let path = straight();
        let sd = frenet_project(&path, &[[2.5, 0.5], [2.5, -0.5]], 0.1);
        // second point sits at the same s, so s is non-decreasing
        let sd = sd.unwrap();
        assert!((sd.s()[0] - 2.5).abs() < 1e-12);
        assert!((sd.d()[0] - 0.5).abs() < 1e-12);
        assert!((sd.d()[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn corridor_violation_names_index() {
        let path = straight();
        let err = frenet_project(&path, &[[1.0, 0.0], [2.0, 0.0], [3.0, 12.0]], 0.1).unwrap_err();
        assert!(matches!(err, Error::OutsideCorridor { index: 2, .. }));
    }

    #[test]
    fn circle_round_trip() {
        let r = 20.0;
        let path = ReferencePath::circle_arc(r, 1.0, 2.0).unwrap();
        let xy: Vec<[f64; 2]> = (0..150)
            .map(|i| {
                let phi = 0.05 + i as f64 * 0.0125;
                let rad = r + 0.3 * (i as f64 * 0.37).sin();
                [rad * phi.cos(), rad * phi.sin()]
            })
            .collect();
        let sd = frenet_project(&path, &xy, 0.1).unwrap();
        let mut worst: f64 = 0.0;
        for (i, p) in xy.iter().enumerate() {
            let q = path.point_at(sd.s()[i], sd.d()[i]);
            worst = worst.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            // closed form: arclength along the chord polygon tracks r·φ
            let phi = 0.05 + i as f64 * 0.0125;
            assert!((sd.s()[i] - r * phi).abs() < 0.02);
        }
        assert!(worst < 1e-3, "round trip error {worst}");
    }

    #[test]
    fn curvature_examples() {
        let path = straight();
        for s in [0.0, 3.3, 10.0] {
            assert_eq!(path.curvature_at(s).value, 0.0);
        }
        let circle = ReferencePath::circle_arc(20.0, 1.0, 3.0).unwrap();
        for i in 0..=60 {
            let s = i as f64 * circle.length() / 60.0;
            let k = circle.curvature_at(s);
            assert!((k.value - 0.05).abs() < 1e-3, "{}", k.value);
            assert!(!k.clamped);
        }
        let c = circle.curvature_at(-1.0);
        assert!(c.clamped);
        assert_eq!(c.value, circle.curvature_at(0.0).value);
    }

    #[test]
    fn clockwise_curvature_is_negative() {
        let cw = ReferencePath::new(vec![[0.0, 0.0], [1.0, -0.1], [2.0, -0.4]]).unwrap();
        assert!(cw.curvature_at(1.0).value < 0.0);
    }

    #[test]
    fn sd_trajectory_rejects_backward_motion() {
        assert!(SdTrajectory::on_path(vec![0.0, 1.0, 0.5], 0.1).is_err());
        assert!(SdTrajectory::on_path(vec![0.0, 1.0, 1.0 - 1e-9], 0.1).is_ok());
    }

    #[test]
    fn translation_does_not_change_projection() {
        let path = ReferencePath::circle_arc(12.0, 0.5, 1.0).unwrap();
        let shifted = ReferencePath::new(
            path.waypoints().iter().map(|p| [p[0] + 100.0, p[1] - 40.0]).collect(),
        )
        .unwrap();
        let (s1, d1) = path.locate([11.0, 3.0]);
        let (s2, d2) = shifted.locate([111.0, -37.0]);
        assert!((s1 - s2).abs() < 1e-9 && (d1 - d2).abs() < 1e-9);
    }
}

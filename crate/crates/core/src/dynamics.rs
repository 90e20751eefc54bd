//! Deterministic discrete-time dynamics, rollout, and the finite-horizon
//! LQR solver used to synthesize demonstrations and to check MPC.

use nalgebra::{DMatrix, Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Action, State, Trajectory};

/// The transition function `x' = f(x, u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `[position, velocity]` driven by an acceleration input.
    PointMass,
    /// A user supplied linear model `x' = A x + B u` (row-major matrices).
    Linear { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsModel {
    kind: ModelKind,
    dt: f64,
    state_dim: usize,
    action_dim: usize,
}

impl DynamicsModel {
    pub fn point_mass(dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        Ok(DynamicsModel {
            kind: ModelKind::PointMass,
            dt,
            state_dim: 2,
            action_dim: 1,
        })
    }

    pub fn linear(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        let n = a.len();
        if n == 0 || a.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("A must be a non-empty square matrix"));
        }
        if b.len() != n || b[0].is_empty() || b.iter().any(|row| row.len() != b[0].len()) {
            return Err(Error::invalid("B must have one row per state and a fixed width"));
        }
        let m = b[0].len();
        if a.iter().chain(b.iter()).flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear model matrices".into()));
        }
        Ok(DynamicsModel {
            kind: ModelKind::Linear { a, b },
            dt,
            state_dim: n,
            action_dim: m,
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// The model as `(A, B)` matrices.
    pub fn matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        match &self.kind {
            ModelKind::PointMass => (
                DMatrix::from_row_slice(2, 2, &[1.0, self.dt, 0.0, 1.0]),
                DMatrix::from_row_slice(2, 1, &[0.0, self.dt]),
            ),
            ModelKind::Linear { a, b } => {
                let n = self.state_dim;
                let m = self.action_dim;
                (
                    DMatrix::from_fn(n, n, |i, j| a[i][j]),
                    DMatrix::from_fn(n, m, |i, j| b[i][j]),
                )
            }
        }
    }

    pub(crate) fn step_raw(&self, x: &[f64], u: &[f64], out: &mut Vec<f64>) {
        out.clear();
        match &self.kind {
            ModelKind::PointMass => {
                out.push(x[0] + self.dt * x[1]);
                out.push(x[1] + self.dt * u[0]);
            }
            ModelKind::Linear { a, b } => {
                for (arow, brow) in a.iter().zip(b) {
                    let ax: f64 = arow.iter().zip(x).map(|(p, q)| p * q).sum();
                    let bu: f64 = brow.iter().zip(u).map(|(p, q)| p * q).sum();
                    out.push(ax + bu);
                }
            }
        }
    }

    fn check_dims(&self, x: &State, u: &Action) -> Result<()> {
        if x.dim() != self.state_dim {
            return Err(Error::dims("state", self.state_dim, x.dim()));
        }
        if u.dim() != self.action_dim {
            return Err(Error::dims("action", self.action_dim, u.dim()));
        }
        Ok(())
    }

    pub fn step(&self, x: &State, u: &Action) -> Result<State> {
        self.check_dims(x, u)?;
        let mut out = Vec::with_capacity(self.state_dim);
        self.step_raw(x.as_slice(), u.as_slice(), &mut out);
        State::new(out)
    }

    /// Applies `actions` from `x0`; the trajectory holds one state per action.
    pub fn rollout(&self, x0: &State, actions: &[Action]) -> Result<Trajectory> {
        if actions.is_empty() {
            return Err(Error::invalid("rollout needs at least one action"));
        }
        let mut states = Vec::with_capacity(actions.len());
        let mut x = x0.clone();
        for (k, u) in actions.iter().enumerate() {
            self.check_dims(&x, u)?;
            states.push(x.clone());
            if k + 1 < actions.len() {
                x = self.step(&x, u)?;
            }
        }
        Trajectory::new(states, actions.to_vec(), self.dt)
    }

    /// Rollout from a flat step-major action vector, skipping per-element
    /// validation. Returns the flat state sequence `x_0 .. x_{N-1}`.
    pub(crate) fn rollout_flat(&self, x0: &[f64], actions: &[f64]) -> Vec<f64> {
        let n = self.state_dim;
        let m = self.action_dim;
        let steps = actions.len() / m;
        let mut states = Vec::with_capacity(steps * n);
        let mut x = x0.to_vec();
        let mut next = Vec::with_capacity(n);
        for k in 0..steps {
            states.extend_from_slice(&x);
            if k + 1 < steps {
                self.step_raw(&x, &actions[k * m..(k + 1) * m], &mut next);
                std::mem::swap(&mut x, &mut next);
            }
        }
        states
    }

    /// The state reached after the final action of `traj`.
    pub fn next_state(&self, traj: &Trajectory) -> Result<State> {
        let last = traj.len() - 1;
        self.step(&traj.states()[last], &traj.actions()[last])
    }

    pub(crate) fn trajectory_from_flat(&self, x0: &[f64], actions: &[f64]) -> Result<Trajectory> {
        let states = self.rollout_flat(x0, actions);
        let n = self.state_dim;
        let m = self.action_dim;
        Trajectory::from_rows(
            states.chunks(n).map(<[f64]>::to_vec).collect(),
            actions.chunks(m).map(<[f64]>::to_vec).collect(),
            self.dt,
        )
    }
}

/// Checks that every stored state follows from its predecessor.
///
/// Returns `Ok(false)` when some transition deviates by more than `tol`
/// (Euclidean norm), and an error when dimensions disagree with the model.
pub fn validate_trajectory(traj: &Trajectory, model: &DynamicsModel, tol: f64) -> Result<bool> {
    if traj.state_dim() != model.state_dim() {
        return Err(Error::dims("trajectory state", model.state_dim(), traj.state_dim()));
    }
    if traj.action_dim() != model.action_dim() {
        return Err(Error::dims("trajectory action", model.action_dim(), traj.action_dim()));
    }
    let mut next = Vec::with_capacity(model.state_dim());
    for k in 0..traj.len() - 1 {
        model.step_raw(
            traj.states()[k].as_slice(),
            traj.actions()[k].as_slice(),
            &mut next,
        );
        let err: f64 = next
            .iter()
            .zip(traj.states()[k + 1].as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if !(err <= tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Finite-horizon LQR problem on the point-mass model with `Q = q·I₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LqrParams {
    pub q: f64,
    pub r: f64,
    pub horizon: usize,
    pub dt: f64,
}

impl LqrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(Error::invalid(format!("q must be positive, got {}", self.q)));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::invalid(format!("r must be positive, got {}", self.r)));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if !(self.q / self.r).is_finite() {
            return Err(Error::invalid("q / r is not finite"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.q / self.r
    }
}

/// `Σ_{i<N} q·|x_i|² + r·u_i²` over the stored steps of `traj`.
pub fn lqr_cost(traj: &Trajectory, q: f64, r: f64) -> f64 {
    traj.states()
        .iter()
        .zip(traj.actions())
        .map(|(x, u)| {
            let xx: f64 = x.as_slice().iter().map(|v| v * v).sum();
            let uu: f64 = u.as_slice().iter().map(|v| v * v).sum();
            q * xx + r * uu
        })
        .sum()
}

/// Optimal trajectory of the horizon-`N` point-mass LQR from `x0`.
///
/// The cost covers the `N` stored state/action pairs; the state reached by
/// the last action carries no cost, so the final action is always zero.
/// Feedback gains come from the backward Riccati recursion.
pub fn lqr_solve(params: &LqrParams, x0: &State) -> Result<Trajectory> {
    params.validate()?;
    if x0.dim() != 2 {
        return Err(Error::dims("lqr initial state", 2, x0.dim()));
    }
    let dt = params.dt;
    let a = Matrix2::new(1.0, dt, 0.0, 1.0);
    let b = Vector2::new(0.0, dt);
    let q = Matrix2::identity() * params.q;

    let mut p = Matrix2::zeros();
    let mut gains = vec![RowVector2::zeros(); params.horizon];
    for k in (0..params.horizon).rev() {
        let pb = p * b;
        let denom = params.r + b.dot(&pb);
        let gain = (pb.transpose() * a) / denom;
        p = q + a.transpose() * p * (a - b * gain);
        p = (p + p.transpose()) * 0.5;
        gains[k] = gain;
    }

    let model = DynamicsModel::point_mass(dt)?;
    let mut x = Vector2::new(x0.as_slice()[0], x0.as_slice()[1]);
    let mut actions = Vec::with_capacity(params.horizon);
    for gain in &gains {
        let u = -(gain * x)[0];
        actions.push(Action::new(vec![u])?);
        x = Vector2::new(x[0] + dt * x[1], x[1] + dt * u);
    }
    model.rollout(x0, &actions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> State {
        State::new(v.to_vec()).unwrap()
    }

    fn u(v: f64) -> Action {
        Action::new(vec![v]).unwrap()
    }

    #[test]
    fn point_mass_step() {
        let m = DynamicsModel::point_mass(0.1).unwrap();
        let x = m.step(&s(&[0.0, 1.0]), &u(2.0)).unwrap();
        assert!((x.as_slice()[0] - 0.1).abs() < 1e-15);
        assert!((x.as_slice()[1] - 1.2).abs() < 1e-15);

        let m = DynamicsModel::point_mass(0.2).unwrap();
        let x = m.step(&s(&[5.0, -1.0]), &u(0.5)).unwrap();
        assert!((x.as_slice()[0] - 4.8).abs() < 1e-15);
        assert!((x.as_slice()[1] + 0.9).abs() < 1e-15);

        for dt in [0.01, 0.3, 2.0] {
            let m = DynamicsModel::point_mass(dt).unwrap();
            assert_eq!(m.step(&s(&[0.0, 0.0]), &u(0.0)).unwrap().as_slice(), &[0.0, 0.0]);
        }
    }

    #[test]
    fn step_rejects_wrong_dims() {
        let m = DynamicsModel::point_mass(0.1).unwrap();
        assert!(matches!(
            m.step(&s(&[0.0, 1.0, 2.0]), &u(0.0)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(m
            .step(&s(&[0.0, 1.0]), &Action::new(vec![0.0, 1.0]).unwrap())
            .is_err());
    }

    #[test]
    fn rollout_examples() {
        let m = DynamicsModel::point_mass(0.1).unwrap();
        let t = m.rollout(&s(&[1.0, 0.0]), &vec![u(0.0); 5]).unwrap();
        assert!(t.states().iter().all(|x| x.as_slice() == [1.0, 0.0]));

        let m = DynamicsModel::point_mass(1.0).unwrap();
        let t = m.rollout(&s(&[0.0, 1.0]), &vec![u(0.0); 3]).unwrap();
        assert_eq!(t.component(0), vec![0.0, 1.0, 2.0]);
        assert_eq!(t.dt(), 1.0);
        assert!(validate_trajectory(&t, &m, 1e-12).unwrap());
    }

    #[test]
    fn rollout_equals_repeated_step() {
        let m = DynamicsModel::point_mass(0.1).unwrap();
        let acts: Vec<Action> = (0..20).map(|k| u((k as f64 * 0.7).sin())).collect();
        let t = m.rollout(&s(&[3.0, -1.0]), &acts).unwrap();
        let mut x = s(&[3.0, -1.0]);
        for k in 0..acts.len() {
            assert_eq!(&t.states()[k], &x);
            x = m.step(&x, &acts[k]).unwrap();
        }
    }

    #[test]
    fn validate_detects_perturbation() {
        let m = DynamicsModel::point_mass(0.1).unwrap();
        let acts: Vec<Action> = (0..10).map(|k| u(k as f64 * 0.1)).collect();
        let t = m.rollout(&s(&[0.0, 1.0]), &acts).unwrap();
        assert!(validate_trajectory(&t, &m, 1e-9).unwrap());

        let mut rows: Vec<Vec<f64>> = t.states().iter().map(|x| x.as_slice().to_vec()).collect();
        rows[4][0] += 1.0;
        let bad = Trajectory::from_rows(
            rows,
            t.actions().iter().map(|a| a.as_slice().to_vec()).collect(),
            0.1,
        )
        .unwrap();
        assert!(!validate_trajectory(&bad, &m, 1e-6).unwrap());

        let wrong = DynamicsModel::linear(vec![vec![1.0]], vec![vec![1.0]], 0.1).unwrap();
        assert!(validate_trajectory(&t, &wrong, 1e-6).is_err());
    }

    #[test]
    fn nan_action_rejected_before_validation() {
        assert!(Trajectory::from_rows(
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![vec![0.0], vec![f64::NAN]],
            0.1
        )
        .is_err());
    }

    #[test]
    fn linear_model_matches_point_mass() {
        let pm = DynamicsModel::point_mass(0.1).unwrap();
        let lin = DynamicsModel::linear(
            vec![vec![1.0, 0.1], vec![0.0, 1.0]],
            vec![vec![0.0], vec![0.1]],
            0.1,
        )
        .unwrap();
        let acts: Vec<Action> = (0..10).map(|k| u(k as f64 - 4.0)).collect();
        let a = pm.rollout(&s(&[1.0, 2.0]), &acts).unwrap();
        let b = lin.rollout(&s(&[1.0, 2.0]), &acts).unwrap();
        for (x, y) in a.states().iter().zip(b.states()) {
            for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    fn params(q: f64, r: f64) -> LqrParams {
        LqrParams { q, r, horizon: 50, dt: 0.1 }
    }

    #[test]
    fn lqr_rejects_bad_weights() {
        let x0 = s(&[1.0, 0.0]);
        assert!(lqr_solve(&params(0.0, 1.0), &x0).is_err());
        assert!(lqr_solve(&params(1.0, -1.0), &x0).is_err());
        assert!(lqr_solve(&params(1.0, 1.0), &s(&[1.0])).is_err());
    }

    #[test]
    fn lqr_limits() {
        let t = lqr_solve(&params(1e-12, 1.0), &s(&[8.0, 0.0])).unwrap();
        assert!(t.actions().iter().all(|a| a.as_slice()[0].abs() < 1e-6));

        let t = lqr_solve(&params(4.0, 1.0), &s(&[0.0, 0.0])).unwrap();
        assert!(t.states().iter().all(|x| x.as_slice() == [0.0, 0.0]));
        assert!(t.actions().iter().all(|a| a.as_slice()[0] == 0.0));
    }

    #[test]
    fn lqr_final_action_is_zero() {
        let t = lqr_solve(&params(4.0, 1.0), &s(&[8.0, 0.0])).unwrap();
        assert_eq!(t.actions().last().unwrap().as_slice()[0], 0.0);
    }

    #[test]
    fn lqr_scale_invariance() {
        for c in [0.01, 3.0, 250.0] {
            let a = lqr_solve(&params(4.0, 1.0), &s(&[8.0, -1.0])).unwrap();
            let b = lqr_solve(&params(4.0 * c, c), &s(&[8.0, -1.0])).unwrap();
            for (x, y) in a.states().iter().zip(b.states()) {
                for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
                    assert!((p - q).abs() < 1e-10);
                }
            }
        }
    }
}

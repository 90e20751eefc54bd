//! Domain types shared by every stage of the pipeline.
//!
//! All types validate their invariants at construction and are immutable
//! afterwards, so they can be shared freely between worker threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// A system state. For the point-mass model: `[position, velocity]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct State(Vec<f64>);

impl State {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("state must have at least one component"));
        }
        check_finite(&values, "state")?;
        Ok(State(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for State {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        State::new(v)
    }
}

impl From<State> for Vec<f64> {
    fn from(s: State) -> Self {
        s.0
    }
}

/// A control input. For the point-mass model: `[acceleration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Action(Vec<f64>);

impl Action {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("action must have at least one component"));
        }
        check_finite(&values, "action")?;
        Ok(Action(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for Action {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Action::new(v)
    }
}

impl From<Action> for Vec<f64> {
    fn from(a: Action) -> Self {
        a.0
    }
}

/// A timed sequence of `N` states and the `N` actions applied in them.
///
/// `states[k + 1]` is the result of applying `actions[k]` in `states[k]`;
/// the state reached by the final action is not stored and can be
/// recovered by stepping the dynamics once more.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory", into = "RawTrajectory")]
pub struct Trajectory {
    states: Vec<State>,
    actions: Vec<Action>,
    dt: f64,
}

#[derive(Serialize, Deserialize)]
struct RawTrajectory {
    states: Vec<State>,
    actions: Vec<Action>,
    dt: f64,
}

impl TryFrom<RawTrajectory> for Trajectory {
    type Error = Error;
    fn try_from(r: RawTrajectory) -> Result<Self> {
        Trajectory::new(r.states, r.actions, r.dt)
    }
}

impl From<Trajectory> for RawTrajectory {
    fn from(t: Trajectory) -> Self {
        RawTrajectory {
            states: t.states,
            actions: t.actions,
            dt: t.dt,
        }
    }
}

impl Trajectory {
    pub fn new(states: Vec<State>, actions: Vec<Action>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if states.len() != actions.len() {
            return Err(Error::dims("trajectory actions", states.len(), actions.len()));
        }
        if states.len() < 2 {
            return Err(Error::TooShort {
                context: "trajectory".into(),
                needed: 2,
                found: states.len(),
            });
        }
        let sd = states[0].dim();
        if let Some(bad) = states.iter().find(|s| s.dim() != sd) {
            return Err(Error::dims("trajectory state", sd, bad.dim()));
        }
        let ad = actions[0].dim();
        if let Some(bad) = actions.iter().find(|a| a.dim() != ad) {
            return Err(Error::dims("trajectory action", ad, bad.dim()));
        }
        Ok(Trajectory { states, actions, dt })
    }

    /// Builds a trajectory from raw rows, validating finiteness on the way.
    pub fn from_rows(states: Vec<Vec<f64>>, actions: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        let states = states.into_iter().map(State::new).collect::<Result<Vec<_>>>()?;
        let actions = actions.into_iter().map(Action::new).collect::<Result<Vec<_>>>()?;
        Trajectory::new(states, actions, dt)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actions[0].dim()
    }

    /// Actions flattened step-major into one vector.
    pub fn flat_actions(&self) -> Vec<f64> {
        self.actions.iter().flat_map(|a| a.as_slice().iter().copied()).collect()
    }

    /// Time series of one state component.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.as_slice()[index]).collect()
    }

    /// Steps `start..end` as a new trajectory.
    pub fn window(&self, start: usize, end: usize) -> Result<Trajectory> {
        if start >= end || end > self.len() {
            return Err(Error::invalid(format!(
                "window {start}..{end} out of range for trajectory of length {}",
                self.len()
            )));
        }
        Trajectory::new(
            self.states[start..end].to_vec(),
            self.actions[start..end].to_vec(),
            self.dt,
        )
    }

    /// The first `n` steps, or the whole trajectory when it is shorter.
    pub fn prefix(&self, n: usize) -> Result<Trajectory> {
        self.window(0, n.min(self.len()))
    }

    /// The last `n` steps.
    pub fn suffix(&self, n: usize) -> Result<Trajectory> {
        if n > self.len() {
            return Err(Error::TooShort {
                context: "trajectory suffix".into(),
                needed: n,
                found: self.len(),
            });
        }
        self.window(self.len() - n, self.len())
    }
}

/// A fixed-dimension summary `f(ξ)` of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "feature vector")?;
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        FeatureVector::new(v)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(f: FeatureVector) -> Self {
        f.0
    }
}

/// Linear cost weights `θ`, kept nonnegative with unit L1 norm.
///
/// The argmin of a linear cost is unchanged by positive scaling, so every
/// weight vector is normalized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CostWeights(Vec<f64>);

impl CostWeights {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        let total = Self::checked_total(&raw)?;
        Ok(CostWeights(raw.into_iter().map(|w| w / total).collect()))
    }

    fn checked_total(raw: &[f64]) -> Result<f64> {
        if raw.is_empty() {
            return Err(Error::invalid("cost weights must be non-empty"));
        }
        check_finite(raw, "cost weights")?;
        if raw.iter().any(|&w| w < 0.0) {
            return Err(Error::invalid("cost weights must be nonnegative"));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("cost weights must not all be zero"));
        }
        Ok(total)
    }

    /// Weights for the two-feature quadratic cost with state weight `q`
    /// and effort weight `r`.
    pub fn from_ratio(ratio: f64) -> Result<Self> {
        CostWeights::new(vec![ratio, 1.0])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `θ₁ / θ₂`, the state-to-effort weight ratio of a two-feature cost.
    pub fn ratio(&self) -> f64 {
        self.0[0] / self.0[1]
    }
}

impl TryFrom<Vec<f64>> for CostWeights {
    type Error = Error;
    /// Already-normalized vectors are kept bit for bit so stored weights
    /// read back unchanged.
    fn try_from(v: Vec<f64>) -> Result<Self> {
        if (CostWeights::checked_total(&v)? - 1.0).abs() <= 1e-12 {
            Ok(CostWeights(v))
        } else {
            CostWeights::new(v)
        }
    }
}

impl From<CostWeights> for Vec<f64> {
    fn from(w: CostWeights) -> Self {
        w.0
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Trajectory;

/// Demonstrations with an optional ground-truth label per trajectory and a
/// train/test partition of their indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    demonstrations: Vec<Trajectory>,
    labels: Option<Vec<f64>>,
    train: Vec<usize>,
    test: Vec<usize>,
}

impl Dataset {
    /// Assembles a dataset from an explicit split, checking the partition.
    pub fn new(
        demonstrations: Vec<Trajectory>,
        labels: Option<Vec<f64>>,
        train: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        let n = demonstrations.len();
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::dims("dataset labels", n, l.len()));
            }
        }
        let mut seen = vec![false; n];
        for &i in train.iter().chain(&test) {
            if i >= n {
                return Err(Error::invalid(format!("split index {i} out of range ({n} demos)")));
            }
            if seen[i] {
                return Err(Error::invalid(format!("split index {i} appears twice")));
            }
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("demonstration {missing} is in neither split")));
        }
        Ok(Dataset {
            demonstrations,
            labels,
            train,
            test,
        })
    }

    pub fn demonstrations(&self) -> &[Trajectory] {
        &self.demonstrations
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    pub fn len(&self) -> usize {
        self.demonstrations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demonstrations.is_empty()
    }

    pub fn train_demos(&self) -> Vec<&Trajectory> {
        self.train.iter().map(|&i| &self.demonstrations[i]).collect()
    }

    pub fn test_demos(&self) -> Vec<&Trajectory> {
        self.test.iter().map(|&i| &self.demonstrations[i]).collect()
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.demonstrations.len() {
            return Err(Error::dims("dataset labels", self.demonstrations.len(), labels.len()));
        }
        self.labels = Some(labels);
        Ok(self)
    }
}

/// Seeded shuffle split with `round(train_fraction · n)` training demos.
///
/// Both sides are kept non-empty; indices are returned in ascending order.
pub fn split_dataset(demos: Vec<Trajectory>, train_fraction: f64, seed: u64) -> Result<Dataset> {
    if demos.is_empty() {
        return Err(Error::invalid("cannot split an empty demonstration list"));
    }
    if demos.len() < 2 {
        return Err(Error::TooShort {
            context: "dataset split".into(),
            needed: 2,
            found: demos.len(),
        });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = demos.len();
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Dataset::new(demos, None, train, test)
}

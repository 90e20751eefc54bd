use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CostWeights, FeatureVector};

const EXACT_MATCH: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnEntry {
    pub feature: FeatureVector,
    pub theta: CostWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnMetric {
    #[default]
    Euclidean,
}

/// Per-demonstration weights indexed by their (standardized) features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnStyleModel {
    entries: Vec<KnnEntry>,
    #[serde(default)]
    metric: KnnMetric,
    /// Training demonstrations whose fit failed and were left out.
    #[serde(default)]
    dropped: usize,
}

impl KnnStyleModel {
    pub fn new(entries: Vec<KnnEntry>) -> Result<Self> {
        Self::with_dropped(entries, 0)
    }

    pub(crate) fn with_dropped(entries: Vec<KnnEntry>, dropped: usize) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::invalid("kNN index needs at least one entry"));
        };
        let (fd, td) = (first.feature.dim(), first.theta.dim());
        for e in &entries {
            if e.feature.dim() != fd {
                return Err(Error::dims("kNN entry feature", fd, e.feature.dim()));
            }
            if e.theta.dim() != td {
                return Err(Error::dims("kNN entry weights", td, e.theta.dim()));
            }
        }
        Ok(KnnStyleModel {
            entries,
            metric: KnnMetric::Euclidean,
            dropped,
        })
    }

    pub fn entries(&self) -> &[KnnEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn metric(&self) -> KnnMetric {
        self.metric
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn feature_dim(&self) -> usize {
        self.entries[0].feature.dim()
    }
}

/// Inverse-distance weighted combination of the `k` nearest entries'
/// weights, renormalized to the simplex. A query within 1e-12 of its
/// nearest entry, or a single-neighbour query, returns the nearest entry's
/// weights unchanged.
pub fn knn_query(model: &KnnStyleModel, q: &FeatureVector, k: usize) -> Result<CostWeights> {
    if k == 0 || k > model.len() {
        return Err(Error::invalid(format!(
            "k = {k} out of range for an index of {} entries",
            model.len()
        )));
    }
    if q.dim() != model.feature_dim() {
        return Err(Error::dims("kNN query", model.feature_dim(), q.dim()));
    }
    let mut dist: Vec<(f64, usize)> = model
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.feature.distance(q), i))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nearest = &dist[..k];
    if nearest[0].0 < EXACT_MATCH || k == 1 {
        return Ok(model.entries[nearest[0].1].theta.clone());
    }
    let dim = model.entries[0].theta.dim();
    let mut acc = vec![0.0; dim];
    for &(d, i) in nearest {
        for (a, t) in acc.iter_mut().zip(model.entries[i].theta.as_slice()) {
            *a += t / d;
        }
    }
    CostWeights::new(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn entry(f: &[f64], t: &[f64]) -> KnnEntry {
        KnnEntry {
            feature: FeatureVector::new(f.to_vec()).unwrap(),
            theta: CostWeights::new(t.to_vec()).unwrap(),
        }
    }

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn exact_match_returns_stored_theta() {
        let m = KnnStyleModel::new(vec![entry(&[0.0, 0.0], &[0.2, 0.8]), entry(&[1.0, 1.0], &[0.9, 0.1])]).unwrap();
        for k in 1..=2 {
            assert_eq!(knn_query(&m, &fv(&[1.0, 1.0]), k).unwrap().as_slice(), &[0.9, 0.1]);
        }
    }

    #[test]
    fn equidistant_pair_averages() {
        let m = KnnStyleModel::new(vec![entry(&[-1.0], &[0.2, 0.8]), entry(&[1.0], &[0.6, 0.4])]).unwrap();
        let t = knn_query(&m, &fv(&[0.0]), 2).unwrap();
        assert!((t.as_slice()[0] - 0.4).abs() < 1e-15);
        assert!((t.as_slice()[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn singleton_returns_its_theta() {
        let m = KnnStyleModel::new(vec![entry(&[3.0, 1.0], &[0.3, 0.7])]).unwrap();
        assert_eq!(knn_query(&m, &fv(&[-8.0, 2.0]), 1).unwrap().as_slice(), &[0.3, 0.7]);
    }

    #[test]
    fn k_out_of_range() {
        let m = KnnStyleModel::new(vec![entry(&[0.0], &[1.0, 1.0])]).unwrap();
        assert!(knn_query(&m, &fv(&[1.0]), 0).is_err());
        assert!(knn_query(&m, &fv(&[1.0]), 2).is_err());
    }

    fn brute_force(entries: &[KnnEntry], q: &[f64], k: usize) -> Vec<f64> {
        let mut all: Vec<(f64, usize)> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let d = e
                    .feature
                    .as_slice()
                    .iter()
                    .zip(q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (d, i)
            })
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if all[0].0 < 1e-12 || k == 1 {
            return entries[all[0].1].theta.as_slice().to_vec();
        }
        let mut num = vec![0.0; entries[0].theta.dim()];
        for &(d, i) in &all[..k] {
            for (n, t) in num.iter_mut().zip(entries[i].theta.as_slice()) {
                *n += t / d;
            }
        }
        let s: f64 = num.iter().sum();
        num.iter().map(|v| v / s).collect()
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.random_range(1..12);
            let entries: Vec<KnnEntry> = (0..n)
                .map(|_| {
                    let f: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let t: Vec<f64> = (0..2).map(|_| rng.random_range(0.01..1.0)).collect();
                    entry(&f, &t)
                })
                .collect();
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let k = rng.random_range(1..=n);
            let m = KnnStyleModel::new(entries.clone()).unwrap();
            let got = knn_query(&m, &fv(&q), k).unwrap();
            let want = brute_force(&entries, &q, k);
            for (g, w) in got.as_slice().iter().zip(&want) {
                assert!((g - w).abs() < 1e-15, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn full_k_is_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let entries: Vec<KnnEntry> = (0..7)
            .map(|_| entry(&[rng.random_range(0.0..5.0)], &[rng.random_range(0.1..1.0), 0.5]))
            .collect();
        let mut reversed = entries.clone();
        reversed.reverse();
        let q = fv(&[2.5]);
        let a = knn_query(&KnnStyleModel::new(entries).unwrap(), &q, 7).unwrap();
        let b = knn_query(&KnnStyleModel::new(reversed).unwrap(), &q, 7).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn output_is_on_simplex(q in -3.0f64..3.0, k in 1usize..5) {
            let m = KnnStyleModel::new(vec![
                entry(&[0.0], &[0.1, 0.9]),
                entry(&[1.0], &[0.5, 0.5]),
                entry(&[-1.5], &[0.8, 0.2]),
                entry(&[2.2], &[0.3, 0.7]),
            ]).unwrap();
            let t = knn_query(&m, &fv(&[q]), k).unwrap();
            proptest::prop_assert!((t.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            proptest::prop_assert!(t.as_slice().iter().all(|v| *v >= 0.0));
        }
    }
}

//! k-nearest neighbours with Euclidean distance and a cross-validated k.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    /// Fixed k; when absent k is chosen by cross-validation over `k_grid`.
    pub k: Option<usize>,
    pub k_grid: Vec<usize>,
    pub folds: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: None,
            k_grid: vec![3, 5, 7, 9, 11, 13],
            folds: 5,
        }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.k == Some(0) || self.k_grid.contains(&0) {
            return Err(LearnError::InvalidParam {
                name: "knn.k",
                reason: "must be >= 1".into(),
            });
        }
        if self.k.is_none() && (self.k_grid.is_empty() || self.folds < 2) {
            return Err(LearnError::InvalidParam {
                name: "knn.k_grid/folds",
                reason: "need a non-empty grid and >= 2 folds".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<bool>,
    /// Cross-validated accuracy per grid k, empty when k was fixed.
    pub cv_accuracy: Vec<(usize, f64)>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Sorted `(distance², label)` from `q` to every reference row.
fn neighbours(q: &[f64], x: &[Vec<f64>], y: &[bool], idx: &[usize]) -> Vec<(f64, bool)> {
    let mut d: Vec<(f64, bool)> = idx.iter().map(|&i| (sq_dist(q, &x[i]), y[i])).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    d
}

/// Share of `T` among the `k` nearest, extended to every neighbour tied
/// with the k-th distance.
fn vote(sorted: &[(f64, bool)], k: usize) -> f64 {
    let kth = sorted[k - 1].0;
    let mut m = k;
    while m < sorted.len() && sorted[m].0 == kth {
        m += 1;
    }
    sorted[..m].iter().filter(|(_, t)| *t).count() as f64 / m as f64
}

impl KnnModel {
    pub fn score(&self, q: &[f64]) -> f64 {
        let idx: Vec<usize> = (0..self.x.len()).collect();
        vote(&neighbours(q, &self.x, &self.y, &idx), self.k)
    }
}

pub fn fit(x: &[Vec<f64>], y: &[bool], params: &KnnParams, seed: u64) -> Result<KnnModel, LearnError> {
    let n = x.len();
    if n == 0 {
        return Err(LearnError::Empty);
    }
    if let Some(k) = params.k {
        if k > n {
            return Err(LearnError::TooFewRows { needed: k, actual: n });
        }
        return Ok(KnnModel {
            k,
            x: x.to_vec(),
            y: y.to_vec(),
            cv_accuracy: Vec::new(),
        });
    }

    let folds = params.folds.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::from_seed(rng::labeled_seed(seed, "knn-cv")));
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    let smallest_train = (0..folds)
        .map(|f| fold_of.iter().filter(|&&g| g != f).count())
        .min()
        .unwrap_or(0);
    let mut grid: Vec<usize> = params.k_grid.iter().copied().filter(|&k| k <= smallest_train).collect();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        let needed = params.k_grid.iter().copied().min().unwrap_or(1);
        return Err(LearnError::TooFewRows { needed, actual: smallest_train });
    }

    // Correct-prediction counts per grid k, summed over held-out rows.
    let correct: Vec<usize> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let mut c = vec![0usize; grid.len()];
            for i in (0..n).filter(|&i| fold_of[i] == f) {
                let nb = neighbours(&x[i], x, y, &train_idx);
                for (slot, &k) in grid.iter().enumerate() {
                    if (vote(&nb, k) > 0.5) == y[i] {
                        c[slot] += 1;
                    }
                }
            }
            c
        })
        .reduce(
            || vec![0usize; grid.len()],
            |mut a, b| {
                for (u, v) in a.iter_mut().zip(b) {
                    *u += v;
                }
                a
            },
        );
    let cv_accuracy: Vec<(usize, f64)> = grid
        .iter()
        .zip(&correct)
        .map(|(&k, &c)| (k, c as f64 / n as f64))
        .collect();
    // Strictly better accuracy wins, so ties keep the smallest k.
    let mut best = cv_accuracy[0];
    for &(k, a) in &cv_accuracy[1..] {
        if a > best.1 {
            best = (k, a);
        }
    }
    Ok(KnnModel {
        k: best.0,
        x: x.to_vec(),
        y: y.to_vec(),
        cv_accuracy,
    })
}

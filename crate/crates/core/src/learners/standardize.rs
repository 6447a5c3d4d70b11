//! Per-column z-scoring fitted on training rows only.

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    /// Indices of retained input columns.
    pub keep: Vec<usize>,
    /// Columns dropped for zero variance.
    pub dropped: Vec<usize>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// Column means and `N − 1` standard deviations. Constant columns are
    /// dropped and listed in `dropped`.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, LearnError> {
        if rows.len() < 2 {
            return Err(LearnError::TooFewRows {
                needed: 2,
                actual: rows.len(),
            });
        }
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut st = Standardizer {
            keep: Vec::new(),
            dropped: Vec::new(),
            mean: Vec::new(),
            sd: Vec::new(),
        };
        for j in 0..d {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / (n - 1.0);
            let sd = var.sqrt();
            if sd > 0.0 && sd.is_finite() && rows.iter().any(|r| r[j] != rows[0][j]) {
                st.keep.push(j);
                st.mean.push(m);
                st.sd.push(sd);
            } else {
                st.dropped.push(j);
            }
        }
        if st.keep.is_empty() {
            return Err(LearnError::NoFeatures);
        }
        Ok(st)
    }

    pub fn n_features(&self) -> usize {
        self.keep.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        self.keep
            .iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(&j, (m, s))| (row[j] - m) / s)
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

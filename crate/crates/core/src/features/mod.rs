//! Window featurisation: the 22 catch22 statistics and the five
//! early-warning indicators.

pub mod catch22;
pub mod ews;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Label, LabeledWindow};

pub use catch22::{compute_sf22, SF22_NAMES};
pub use ews::{compute_ewsi5, EWSI5_NAMES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("series is constant")]
    Constant,
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("series too short: need {needed}, got {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("{count} window(s) failed featurisation, first `{first_id}`: {first_error}")]
    Windows {
        count: usize,
        first_id: String,
        first_error: Box<FeatureError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    SF22,
    EWSI5,
}

impl FeatureSet {
    pub fn len(self) -> usize {
        match self {
            FeatureSet::SF22 => 22,
            FeatureSet::EWSI5 => 5,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureSet::SF22 => &SF22_NAMES,
            FeatureSet::EWSI5 => &EWSI5_NAMES,
        }
    }

    /// The number used in classifier names (`22` or `5`).
    pub fn tag(self) -> &'static str {
        match self {
            FeatureSet::SF22 => "22",
            FeatureSet::EWSI5 => "5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "22" | "SF22" | "22SF" | "CATCH22" => Some(FeatureSet::SF22),
            "5" | "EWSI5" | "5EWSI" | "EWS" => Some(FeatureSet::EWSI5),
            _ => None,
        }
    }

    pub fn compute(self, series: &[f64]) -> Result<Vec<f64>, FeatureError> {
        match self {
            FeatureSet::SF22 => compute_sf22(series).map(|v| v.to_vec()),
            FeatureSet::EWSI5 => compute_ewsi5(series).map(|v| v.to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub set: FeatureSet,
}

impl FeatureVector {
    pub fn names(&self) -> &'static [&'static str] {
        self.set.names()
    }
}

/// Row-major features with aligned labels and window ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub set: FeatureSet,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn empty(set: FeatureSet) -> Self {
        FeatureMatrix {
            set,
            rows: Vec::new(),
            labels: Vec::new(),
            ids: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.set.len()
    }

    pub fn names(&self) -> &'static [&'static str] {
        self.set.names()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Boolean targets, `true` for `T`.
    pub fn targets(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_positive()).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            set: self.set,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }
}

/// A window that could not be featurised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFailure {
    pub window_id: String,
    pub error: String,
}

/// `(x − mean) / sd` with the `N − 1` standard deviation.
pub fn z_normalize(series: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if series.len() < 2 {
        return Err(FeatureError::TooShort {
            needed: 2,
            actual: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite);
    }
    let m = mean(series);
    let sd = sample_std(series);
    if sd == 0.0 || series.iter().all(|&v| v == series[0]) {
        return Err(FeatureError::Constant);
    }
    Ok(series.iter().map(|&v| (v - m) / sd).collect())
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn sample_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Featurises windows in input order. With `fail_fast` the first failure
/// aborts; otherwise failing windows are skipped and reported.
pub fn featurize(
    windows: &[LabeledWindow],
    set: FeatureSet,
    fail_fast: bool,
) -> Result<(FeatureMatrix, Vec<FeatureFailure>), FeatureError> {
    let computed: Vec<Result<Vec<f64>, FeatureError>> =
        windows.par_iter().map(|w| set.compute(&w.values)).collect();
    let mut matrix = FeatureMatrix::empty(set);
    let mut failures = Vec::new();
    let mut first: Option<(String, FeatureError)> = None;
    for (w, res) in windows.iter().zip(computed) {
        match res {
            Ok(row) => {
                matrix.rows.push(row);
                matrix.labels.push(w.label);
                matrix.ids.push(w.source_id.clone());
            }
            Err(e) => {
                if first.is_none() {
                    first = Some((w.source_id.clone(), e.clone()));
                }
                failures.push(FeatureFailure {
                    window_id: w.source_id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    if fail_fast {
        if let Some((id, e)) = first {
            return Err(FeatureError::Windows {
                count: failures.len(),
                first_id: id,
                first_error: Box::new(e),
            });
        }
    }
    Ok((matrix, failures))
}

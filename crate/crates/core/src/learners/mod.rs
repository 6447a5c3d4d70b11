//! The four classifiers: gradient boosting, logistic regression, k-nearest
//! neighbours and an RBF support vector machine.

pub mod gbm;
pub mod knn;
pub mod lrm;
pub mod standardize;
pub mod svm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Label;
use crate::features::{FeatureMatrix, FeatureSet};

pub use gbm::{GbmModel, GbmParams};
pub use knn::{KnnModel, KnnParams};
pub use lrm::{LrmModel, LrmParams};
pub use standardize::Standardizer;
pub use svm::{SvmModel, SvmParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("training matrix is empty")]
    Empty,
    #[error("need at least {needed} rows, got {actual}")]
    TooFewRows { needed: usize, actual: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("no usable features: all columns are constant")]
    NoFeatures,
    #[error("dimension mismatch: model expects {expected} columns, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid hyperparameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("model format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    GBM,
    LRM,
    KNN,
    SVM,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::GBM, ModelKind::LRM, ModelKind::KNN, ModelKind::SVM];

    /// Letter used in classifier names (`W5G` and so on).
    pub fn letter(self) -> char {
        match self {
            ModelKind::GBM => 'G',
            ModelKind::LRM => 'L',
            ModelKind::KNN => 'K',
            ModelKind::SVM => 'S',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GBM => "GBM",
            ModelKind::LRM => "LRM",
            ModelKind::KNN => "KNN",
            ModelKind::SVM => "SVM",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "G" | "GBM" => Some(ModelKind::GBM),
            "L" | "LRM" | "LR" => Some(ModelKind::LRM),
            "K" | "KNN" => Some(ModelKind::KNN),
            "S" | "SVM" => Some(ModelKind::SVM),
            _ => None,
        }
    }

    /// Score above which a row is labelled `T`.
    pub fn threshold(self) -> f64 {
        match self {
            ModelKind::SVM => 0.0,
            _ => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub gbm: GbmParams,
    pub lrm: LrmParams,
    pub knn: KnnParams,
    pub svm: SvmParams,
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig {
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        self.gbm.validate()?;
        self.lrm.validate()?;
        self.knn.validate()?;
        self.svm.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state")]
pub enum ModelBody {
    GBM(GbmModel),
    LRM(LrmModel),
    KNN(KnnModel),
    SVM(SvmModel),
}

/// A fitted classifier. Input rows always carry every column of the feature
/// set; the standardiser selects and scales the retained ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub feature_set: FeatureSet,
    pub n_inputs: usize,
    /// Absent for GBM, which splits on raw features.
    pub standardization: Option<Standardizer>,
    pub body: ModelBody,
}

impl TrainedModel {
    fn prepare(&self, row: &[f64]) -> Result<Vec<f64>, LearnError> {
        if row.len() != self.n_inputs {
            return Err(LearnError::Dimension {
                expected: self.n_inputs,
                actual: row.len(),
            });
        }
        Ok(match &self.standardization {
            Some(s) => s.transform_row(row),
            None => row.to_vec(),
        })
    }

    pub fn score_row(&self, row: &[f64]) -> Result<f64, LearnError> {
        let x = self.prepare(row)?;
        Ok(match &self.body {
            ModelBody::GBM(m) => m.score(&x),
            ModelBody::LRM(m) => m.score(&x),
            ModelBody::KNN(m) => m.score(&x),
            ModelBody::SVM(m) => m.decision(&x),
        })
    }

    /// Ranking scores, higher meaning more confidently `T`.
    pub fn predict_score(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, LearnError> {
        rows.iter().map(|r| self.score_row(r)).collect()
    }

    pub fn label_for(&self, score: f64) -> Label {
        if score > self.kind.threshold() {
            Label::T
        } else {
            Label::N
        }
    }

    pub fn predict_label(&self, rows: &[Vec<f64>]) -> Result<Vec<Label>, LearnError> {
        Ok(self.predict_score(rows)?.into_iter().map(|s| self.label_for(s)).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(s: &str) -> Result<Self, LearnError> {
        let m: TrainedModel = serde_json::from_str(s).map_err(|e| LearnError::Format(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnError::Format(format!(
                "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_matrix(train: &FeatureMatrix) -> Result<(), LearnError> {
    if train.rows.is_empty() {
        return Err(LearnError::Empty);
    }
    let d = train.n_cols();
    for r in &train.rows {
        if r.len() != d {
            return Err(LearnError::Dimension {
                expected: d,
                actual: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite("training matrix"));
        }
    }
    Ok(())
}

/// Fits one classifier of the given kind.
pub fn train(kind: ModelKind, train: &FeatureMatrix, config: &TrainConfig) -> Result<TrainedModel, LearnError> {
    config.validate()?;
    check_matrix(train)?;
    let y = train.targets();
    let n_inputs = train.n_cols();
    let (standardization, body) = match kind {
        ModelKind::GBM => (None, ModelBody::GBM(gbm::fit(&train.rows, &y, &config.gbm)?.0)),
        _ => {
            let stats = Standardizer::fit(&train.rows)?;
            let x = stats.transform(&train.rows);
            let body = match kind {
                ModelKind::LRM => ModelBody::LRM(lrm::fit(&x, &y, &config.lrm)?),
                ModelKind::KNN => ModelBody::KNN(knn::fit(&x, &y, &config.knn, config.seed)?),
                ModelKind::SVM => ModelBody::SVM(svm::fit(&x, &y, &config.svm)?.0),
                ModelKind::GBM => unreachable!(),
            };
            (Some(stats), body)
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        feature_set: train.set,
        n_inputs,
        standardization,
        body,
    })
}

use serde::{Deserialize, Serialize};

use super::{accuracy_ci, auc_ci, roc_auc, MetricsError};
use crate::dataset::Label;
use crate::features::FeatureMatrix;
use crate::learners::TrainedModel;

/// Withheld-set performance of one classifier on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classifier: String,
    pub dataset: String,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Absent when the test set holds a single class.
    pub auc: Option<f64>,
    pub auc_ci_halfwidth: Option<f64>,
    pub accuracy: f64,
    pub accuracy_ci_halfwidth: f64,
    pub true_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
    pub false_pos: usize,
}

pub const CSV_HEADER: &str =
    "classifier,dataset,n_pos,n_neg,auc,auc_ci_halfwidth,accuracy,accuracy_ci_halfwidth,tp,fn,tn,fp";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = CSV_HEADER;

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.classifier,
            self.dataset,
            self.n_pos,
            self.n_neg,
            opt(self.auc),
            opt(self.auc_ci_halfwidth),
            self.accuracy,
            self.accuracy_ci_halfwidth,
            self.true_pos,
            self.false_neg,
            self.true_neg,
            self.false_pos
        )
    }
}

/// Scores `test` with `model` and fills a report. Also returns the ranking
/// scores so callers can run DeLong comparisons.
pub fn evaluate(
    model: &TrainedModel,
    test: &FeatureMatrix,
    classifier: &str,
    dataset: &str,
) -> Result<(EvalReport, Vec<f64>), MetricsError> {
    if test.rows.is_empty() {
        return Err(MetricsError::Empty);
    }
    let scores = model
        .predict_score(&test.rows)
        .map_err(|e| MetricsError::Invalid(e.to_string()))?;
    let truth = test.targets();
    let (mut tp, mut fn_, mut tn, mut fp) = (0, 0, 0, 0);
    for (&s, &t) in scores.iter().zip(&truth) {
        match (t, model.label_for(s) == Label::T) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
        }
    }
    let n = truth.len();
    let accuracy = (tp + tn) as f64 / n as f64;
    let (auc, auc_hw) = match roc_auc(&scores, &truth) {
        Ok(a) => (Some(a), Some(auc_ci(&scores, &truth, 0.95)?)),
        Err(MetricsError::SingleClass) => (None, None),
        Err(e) => return Err(e),
    };
    let report = EvalReport {
        classifier: classifier.to_string(),
        dataset: dataset.to_string(),
        n_pos: tp + fn_,
        n_neg: tn + fp,
        auc,
        auc_ci_halfwidth: auc_hw,
        accuracy,
        accuracy_ci_halfwidth: accuracy_ci(accuracy, n, 0.95)?,
        true_pos: tp,
        false_neg: fn_,
        true_neg: tn,
        false_pos: fp,
    };
    Ok((report, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSet;
    use crate::learners::{train, ModelKind, TrainConfig};
    use rand::{Rng, SeedableRng};

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> FeatureMatrix {
        let ids = (0..rows.len()).map(|i| format!("w{i}")).collect();
        FeatureMatrix {
            set: FeatureSet::EWSI5,
            rows,
            labels,
            ids,
        }
    }

    fn lrm_on_first_column() -> TrainedModel {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                vec![s + (i as f64) * 0.01, (i % 3) as f64, (i % 5) as f64, (i % 7) as f64, (i % 4) as f64]
            })
            .collect();
        let labels = (0..20).map(|i| if i % 2 == 0 { Label::T } else { Label::N }).collect();
        train(ModelKind::LRM, &matrix(rows, labels), &TrainConfig::default()).unwrap()
    }

    #[test]
    fn single_class_test_set_has_no_auc() {
        let model = lrm_on_first_column();
        let test = matrix(vec![vec![2.0, 0.0, 0.0, 0.0, 0.0]; 5], vec![Label::T; 5]);
        let (r, _) = evaluate(&model, &test, "W5L", "toy").unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.auc, None);
        assert_eq!(r.accuracy_ci_halfwidth, 0.0);
        assert!(r.csv_row().contains(",NA,NA,"));
    }

    #[test]
    fn empty_test_set_errors() {
        let model = lrm_on_first_column();
        let test = matrix(vec![], vec![]);
        assert_eq!(evaluate(&model, &test, "x", "y").unwrap_err(), MetricsError::Empty);
    }

    #[test]
    fn confusion_counts_add_up() {
        let model = lrm_on_first_column();
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.9).sin(), 0.0, 1.0, 2.0, 3.0]).collect();
        let labels = (0..30).map(|i| if i % 3 == 0 { Label::T } else { Label::N }).collect();
        let (r, scores) = evaluate(&model, &matrix(rows, labels), "c", "d").unwrap();
        assert_eq!(r.true_pos + r.false_neg + r.true_neg + r.false_pos, 30);
        assert_eq!((r.n_pos, r.n_neg), (10, 20));
        assert_eq!(scores.len(), 30);
        assert_eq!(EvalReport::CSV_HEADER.split(',').count(), r.csv_row().split(',').count());
    }

    #[test]
    fn random_scores_give_chance_auc() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let scores: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let labels: Vec<bool> = (0..1000).map(|i| i % 2 == 0).collect();
        let a = roc_auc(&scores, &labels).unwrap();
        assert!((0.45..=0.55).contains(&a), "{a}");
    }
}

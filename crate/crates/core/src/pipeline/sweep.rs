use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::classifier_name;
use super::{prepare, stage, PipelineError, Plan, PreparedDataset, Progress, SweepKind, REPORT_SCHEMA_VERSION};
use crate::dataset::{expanding_lengths, expanding_window, rolling_offsets, rolling_window, LabeledWindow};
use crate::features::{featurize, FeatureSet};
use crate::io;
use crate::learners::{train, ModelKind, TrainConfig};
use crate::metrics::evaluate;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep: SweepKind,
    /// `D` for rolling, `L` for expanding.
    pub x: usize,
    pub dataset: String,
    pub features: String,
    pub model: String,
    pub classifier: String,
    pub n_train: usize,
    pub n_test: usize,
    pub dropped: usize,
    pub auc: Option<f64>,
    pub auc_ci_halfwidth: Option<f64>,
    pub accuracy: f64,
    pub accuracy_ci_halfwidth: f64,
}

pub const SWEEP_HEADER: &str =
    "sweep,x,dataset,features,model,classifier,n_train,n_test,dropped,auc,auc_ci_halfwidth,accuracy,accuracy_ci_halfwidth";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

impl SweepRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.sweep.name(),
            self.x,
            self.dataset,
            self.features,
            self.model,
            self.classifier,
            self.n_train,
            self.n_test,
            self.dropped,
            opt(self.auc),
            opt(self.auc_ci_halfwidth),
            self.accuracy,
            self.accuracy_ci_halfwidth
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub sweep: SweepKind,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Rows of one classifier, in schedule order.
    pub fn cell(&self, classifier: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.classifier == classifier).collect()
    }
}

pub fn schedule(kind: SweepKind) -> Vec<usize> {
    match kind {
        SweepKind::Rolling => rolling_offsets(),
        SweepKind::Expanding => expanding_lengths(),
    }
}

fn cut(kind: SweepKind, windows: &[LabeledWindow], x: usize) -> Result<Vec<LabeledWindow>, PipelineError> {
    windows
        .iter()
        .map(|w| match kind {
            SweepKind::Rolling => rolling_window(w, x),
            SweepKind::Expanding => expanding_window(w, x),
        })
        .collect::<Result<_, _>>()
        .map_err(stage(format!("{} x={x}", kind.name())))
}

/// Retrains and re-evaluates every model at every point of the schedule
/// for one dataset and feature set.
pub fn sweep_cell(
    kind: SweepKind,
    data: &PreparedDataset,
    features: FeatureSet,
    models: &[ModelKind],
    base: &TrainConfig,
    seed: u64,
) -> Result<Vec<SweepRow>, PipelineError> {
    let per_x: Vec<Vec<SweepRow>> = schedule(kind)
        .into_par_iter()
        .map(|x| {
            let at = |e: PipelineError| PipelineError::Stage {
                stage: format!("{} sweep iteration x={x}", kind.name()),
                message: e.to_string(),
            };
            let train_w = cut(kind, &data.train, x).map_err(at)?;
            let test_w = cut(kind, &data.test, x).map_err(at)?;
            let (train_m, f1) = featurize(&train_w, features, false).map_err(stage(format!("featurise x={x}")))?;
            let (test_m, f2) = featurize(&test_w, features, false).map_err(stage(format!("featurise x={x}")))?;
            let dropped = f1.len() + f2.len();
            let mut rows = Vec::with_capacity(models.len());
            for &m in models {
                let name = classifier_name(data.letter, features, m);
                let cfg = TrainConfig {
                    seed: rng::labeled_seed(seed, &format!("{name}-{}-{x}", kind.name())),
                    ..base.clone()
                };
                let model = train(m, &train_m, &cfg).map_err(|e| at(stage(format!("train {name}"))(e)))?;
                let (r, _) = evaluate(&model, &test_m, &name, &data.letter.to_string())
                    .map_err(|e| at(stage(format!("evaluate {name}"))(e)))?;
                rows.push(SweepRow {
                    sweep: kind,
                    x,
                    dataset: data.letter.to_string(),
                    features: features.tag().to_string(),
                    model: m.letter().to_string(),
                    classifier: name,
                    n_train: train_m.n_rows(),
                    n_test: test_m.n_rows(),
                    dropped,
                    auc: r.auc,
                    auc_ci_halfwidth: r.auc_ci_halfwidth,
                    accuracy: r.accuracy,
                    accuracy_ci_halfwidth: r.accuracy_ci_halfwidth,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(per_x.into_iter().flatten().collect())
}

/// `sweep`: rolling (`D = 0..300`) or expanding (`L = 5..370`) schedule over
/// every dataset, feature set and model.
pub fn cmd_sweep(plan: &Plan, kind: SweepKind) -> Result<SweepReport, PipelineError> {
    let dir = plan.out.join("sweep");
    let progress = Progress::start(&dir, &format!("INCOMPLETE_{}", kind.name()))?;
    let prep = prepare(plan)?;
    let mut rows = Vec::new();
    for d in &prep.datasets {
        for &f in &plan.features {
            let mut cell = sweep_cell(kind, d, f, &plan.models, &plan.train, plan.seed)?;
            // Group by classifier, each in schedule order.
            cell.sort_by_key(|r| (plan.models.iter().position(|m| m.letter().to_string() == r.model), r.x));
            rows.extend(cell);
        }
    }
    let report = SweepReport {
        schema_version: REPORT_SCHEMA_VERSION,
        sweep: kind,
        rows,
    };
    let mut csv = format!("{SWEEP_HEADER}\n");
    for r in &report.rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    io::write_string(&dir.join(format!("{}.csv", kind.name())), &csv)?;
    io::write_json(&dir.join(format!("{}.json", kind.name())), &report)?;
    progress.finish()?;
    Ok(report)
}

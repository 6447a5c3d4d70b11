use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{stage, EmpiricalSource, PipelineError, Plan, Progress, REPORT_SCHEMA_VERSION};
use crate::dataset::{Label, LabeledWindow};
use crate::features::featurize;
use crate::incidence::{
    estimate_re, impute_linear, label_empirical_n, label_empirical_t, load_incidence, scale_counts, truncate_tail,
    weekly_to_daily, Cadence, ReConfig, Schema, SerialInterval,
};
use crate::io;
use crate::learners::TrainedModel;
use crate::metrics::accuracy_ci;
use crate::rng;

/// Accuracy of one classifier on one labelled empirical window set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRecord {
    pub classifier: String,
    pub source: String,
    pub label: Label,
    /// `base`, `truncated` or `scaled`.
    pub variant: String,
    pub n: usize,
    pub correct: usize,
    /// Windows the classifier's features could not be computed on.
    pub skipped: usize,
    pub accuracy: f64,
    pub ci_halfwidth: f64,
    pub display: String,
}

/// Table style: `0.9474(±0.1004)`, `1(±0.0000)`.
pub fn format_accuracy(accuracy: f64, halfwidth: f64) -> String {
    let mut a = format!("{accuracy:.4}");
    if a.contains('.') {
        a = a.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    format!("{a}(±{halfwidth:.4})")
}

fn parse_schema(s: &str) -> Result<Schema, PipelineError> {
    match s.to_ascii_lowercase().as_str() {
        "incidence" => Ok(Schema::Incidence),
        "prevalence" => Ok(Schema::Prevalence),
        _ => Err(PipelineError::Config {
            field: "empirical.sources.schema",
            reason: format!("unknown schema `{s}`"),
        }),
    }
}

/// Loads, smooths, imputes and labels one source. Also returns the Re
/// series CSV text.
fn source_windows(plan: &Plan, src: &EmpiricalSource) -> Result<(Vec<LabeledWindow>, String), PipelineError> {
    let schema = parse_schema(&src.schema)?;
    let ctx = format!("empirical source {}", src.name);
    let raw = load_incidence(&src.path, schema).map_err(|e| PipelineError::Io(format!("{}: {e}", src.path.display())))?;
    let daily = if raw.cadence == Cadence::Weekly {
        // Gaps are filled at the native cadence before smoothing.
        weekly_to_daily(&impute_linear(&raw).map_err(stage(&ctx))?).map_err(stage(&ctx))?
    } else {
        impute_linear(&raw).map_err(stage(&ctx))?
    };
    let si = SerialInterval {
        mean: src.si_mean,
        sd: src.si_sd,
    };
    let re = estimate_re(&daily, &si, &ReConfig::default()).map_err(stage(&ctx))?;
    let mut re_csv = Vec::new();
    re.write_csv(&mut re_csv).map_err(|e| PipelineError::Io(e.to_string()))?;
    let re_csv = String::from_utf8(re_csv).map_err(|e| PipelineError::Io(e.to_string()))?;

    let mut windows = Vec::new();
    let label = src.label.to_ascii_uppercase();
    if label == "T" || label == "BOTH" {
        windows.extend(label_empirical_t(&daily, &re, src.min_len.unwrap_or(14), &src.name).map_err(stage(&ctx))?);
    }
    if label == "N" || label == "BOTH" {
        let mut r = rng::from_seed(rng::labeled_seed(plan.seed, &format!("empirical-{}", src.name)));
        windows.extend(
            label_empirical_n(&daily, &re, src.n_windows.unwrap_or(1200), src.min_len.unwrap_or(8), &mut r, &src.name)
                .map_err(stage(&ctx))?,
        );
    }
    if !matches!(label.as_str(), "T" | "N" | "BOTH") {
        return Err(PipelineError::Config {
            field: "empirical.sources.label",
            reason: format!("`{}` is not T, N or both", src.label),
        });
    }
    if windows.is_empty() {
        return Err(PipelineError::Stage {
            stage: ctx,
            message: "no labelled windows".into(),
        });
    }
    Ok((windows, re_csv))
}

fn load_models(plan: &Plan) -> Result<Vec<(String, TrainedModel)>, PipelineError> {
    let dir = plan
        .empirical
        .models_dir
        .clone()
        .unwrap_or_else(|| plan.out.join("experiment").join("models"));
    let paths: Vec<PathBuf> = if plan.empirical.classifiers.is_empty() {
        let mut found: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        found.sort();
        found
    } else {
        plan.empirical.classifiers.iter().map(|c| dir.join(format!("{c}.json"))).collect()
    };
    if paths.is_empty() {
        return Err(PipelineError::Io(format!("no model files in {}", dir.display())));
    }
    paths
        .into_iter()
        .map(|p| {
            let text = io::read_to_string(&p)?;
            let model = TrainedModel::from_json(&text).map_err(|e| PipelineError::Schema {
                path: p.display().to_string(),
                reason: e.to_string(),
            })?;
            let name = p.file_stem().unwrap_or_default().to_string_lossy().to_string();
            Ok((name, model))
        })
        .collect()
}

fn score(
    classifier: &str,
    model: &TrainedModel,
    source: &str,
    variant: &str,
    label: Label,
    windows: &[LabeledWindow],
) -> Result<Option<EmpiricalRecord>, PipelineError> {
    let subset: Vec<LabeledWindow> = windows.iter().filter(|w| w.label == label).cloned().collect();
    if subset.is_empty() {
        return Ok(None);
    }
    let (m, failures) = featurize(&subset, model.feature_set, false).map_err(stage("featurise empirical windows"))?;
    if m.n_rows() == 0 {
        return Err(PipelineError::Stage {
            stage: format!("{classifier} on {source}"),
            message: "no window could be featurised".into(),
        });
    }
    let predicted = model.predict_label(&m.rows).map_err(stage(format!("classify with {classifier}")))?;
    let correct = predicted.iter().filter(|&&p| p == label).count();
    let n = m.n_rows();
    let accuracy = correct as f64 / n as f64;
    let hw = accuracy_ci(accuracy, n, 0.95).map_err(stage("accuracy interval"))?;
    Ok(Some(EmpiricalRecord {
        classifier: classifier.to_string(),
        source: source.to_string(),
        label,
        variant: variant.to_string(),
        n,
        correct,
        skipped: failures.len(),
        accuracy,
        ci_halfwidth: hw,
        display: format_accuracy(accuracy, hw),
    }))
}

/// `classify-empirical`: applies trained models to Re-labelled empirical
/// windows, as given, with the last days of `T` windows removed, and with
/// counts scaled.
pub fn cmd_classify_empirical(plan: &Plan) -> Result<Vec<EmpiricalRecord>, PipelineError> {
    if plan.empirical.sources.is_empty() {
        return Err(PipelineError::Config {
            field: "empirical.sources",
            reason: "no empirical sources configured".into(),
        });
    }
    let days = plan.empirical.truncate_days.unwrap_or(7);
    let factor = plan.empirical.scale_factor.unwrap_or(5.0);
    let models = load_models(plan)?;
    let dir = plan.out.join("empirical");
    let progress = Progress::start(&dir, "INCOMPLETE")?;

    let mut records = Vec::new();
    for src in &plan.empirical.sources {
        let (base, re_csv) = source_windows(plan, src)?;
        io::write_string(&dir.join(format!("re_{}.csv", src.name)), &re_csv)?;
        io::write_windows(&dir.join(format!("windows_{}.csv", src.name)), &base)?;
        let truncated = base
            .iter()
            .map(|w| match w.label {
                Label::T => truncate_tail(w, days),
                Label::N => Ok(w.clone()),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(stage(format!("truncate {}", src.name)))?;
        let scaled = base
            .iter()
            .map(|w| scale_counts(w, factor))
            .collect::<Result<Vec<_>, _>>()
            .map_err(stage(format!("scale {}", src.name)))?;
        for (name, model) in &models {
            for (variant, ws, labels) in [
                ("base", &base, &[Label::T, Label::N][..]),
                ("truncated", &truncated, &[Label::T][..]),
                ("scaled", &scaled, &[Label::T, Label::N][..]),
            ] {
                for &label in labels {
                    if let Some(r) = score(name, model, &src.name, variant, label, ws)? {
                        records.push(r);
                    }
                }
            }
        }
    }

    let mut csv = String::from("classifier,source,label,variant,n,correct,skipped,accuracy,ci_halfwidth,display\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.classifier, r.source, r.label, r.variant, r.n, r.correct, r.skipped, r.accuracy, r.ci_halfwidth, r.display
        ));
    }
    io::write_string(&dir.join("accuracy.csv"), &csv)?;
    io::write_json(
        &dir.join("accuracy.json"),
        &serde_json::json!({ "schema_version": REPORT_SCHEMA_VERSION, "records": records }),
    )?;
    progress.finish()?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_formatting() {
        assert_eq!(format_accuracy(18.0 / 19.0, accuracy_ci(18.0 / 19.0, 19, 0.95).unwrap()), "0.9474(±0.1004)");
        assert_eq!(format_accuracy(1.0, 0.0), "1(±0.0000)");
        assert_eq!(format_accuracy(0.5, 0.25), "0.5(±0.2500)");
    }
}

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{prepare, stage, Dropped, PipelineError, Plan, Prepared, Progress, REPORT_SCHEMA_VERSION};
use crate::features::FeatureSet;
use crate::io;
use crate::learners::{train, ModelKind, TrainConfig};
use crate::metrics::{delong_test, delong_test_unpaired, evaluate, EvalReport};
use crate::rng;

/// One trained and evaluated grid cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub dataset: char,
    pub features: FeatureSet,
    pub model: ModelKind,
    pub report: EvalReport,
    pub scores: Vec<f64>,
    pub truth: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub cells: Vec<Cell>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutput {
    pub fn reports(&self) -> Vec<&EvalReport> {
        self.cells.iter().map(|c| &c.report).collect()
    }
}

/// `W22G`, `E5S`, ...
pub fn classifier_name(dataset: char, features: FeatureSet, model: ModelKind) -> String {
    format!("{dataset}{}{}", features.tag(), model.letter())
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportFile {
    schema_version: u32,
    reports: Vec<EvalReport>,
}

/// Reads `reports.json`, rejecting files written under another schema.
pub fn load_reports(path: &Path) -> Result<Vec<EvalReport>, PipelineError> {
    let text = io::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| PipelineError::Schema {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let version = v.get("schema_version").and_then(|x| x.as_u64());
    if version != Some(u64::from(REPORT_SCHEMA_VERSION)) {
        return Err(PipelineError::Schema {
            path: path.display().to_string(),
            reason: format!("schema_version {version:?}, expected {REPORT_SCHEMA_VERSION}"),
        });
    }
    let file: ReportFile = serde_json::from_value(v).map_err(|e| PipelineError::Schema {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    Ok(file.reports)
}

fn train_cells(plan: &Plan, prep: &Prepared) -> Result<Vec<(Cell, String)>, PipelineError> {
    let mut jobs = Vec::new();
    for d in &prep.datasets {
        for &f in &plan.features {
            for &m in &plan.models {
                jobs.push((d, f, m));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(d, f, m)| {
            let name = classifier_name(d.letter, f, m);
            let train_m = prep.matrix(f, &d.train);
            let test_m = prep.matrix(f, &d.test);
            let cfg = TrainConfig {
                seed: rng::labeled_seed(plan.seed, &name),
                ..plan.train.clone()
            };
            let model = train(m, &train_m, &cfg).map_err(stage(format!("train {name}")))?;
            let (report, scores) =
                evaluate(&model, &test_m, &name, &d.letter.to_string()).map_err(stage(format!("evaluate {name}")))?;
            let cell = Cell {
                dataset: d.letter,
                features: f,
                model: m,
                report,
                scores,
                truth: test_m.targets(),
            };
            Ok((cell, model.to_json()))
        })
        .collect()
}

const DELONG_HEADER: &str = "group,classifier_a,classifier_b,auc_a,auc_b,z,p_value";

fn delong_row(group: &str, a: &Cell, b: &Cell, paired: bool) -> Option<String> {
    // Single-class test sets have no AUC to compare.
    a.report.auc?;
    b.report.auc?;
    let r = if paired {
        delong_test(&a.scores, &b.scores, &a.truth).ok()?
    } else {
        delong_test_unpaired(&a.scores, &a.truth, &b.scores, &b.truth).ok()?
    };
    Some(format!(
        "{group},{},{},{},{},{},{}",
        a.report.classifier, b.report.classifier, r.auc_a, r.auc_b, r.z, r.p_value
    ))
}

/// Pairwise DeLong tests among cells that share `key`.
fn delong_grid<K: PartialEq>(cells: &[Cell], key: impl Fn(&Cell) -> K, group: impl Fn(&Cell) -> String, paired: bool) -> String {
    let mut text = format!("{DELONG_HEADER}\n");
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            if key(a) == key(b) {
                if let Some(row) = delong_row(&group(a), a, b, paired) {
                    text.push_str(&row);
                    text.push('\n');
                }
            }
        }
    }
    text
}

fn rel(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

/// `experiment`: the dataset x feature set x model grid, withheld-set
/// reports, DeLong grids and the trained models.
pub fn cmd_experiment(plan: &Plan) -> Result<ExperimentOutput, PipelineError> {
    let dir = plan.out.join("experiment");
    let progress = Progress::start(&dir, "INCOMPLETE")?;
    let prep = prepare(plan)?;
    let mut files = Vec::new();

    for d in &prep.datasets {
        if plan.write_windows {
            for (part, ws) in [("train", &d.train), ("test", &d.test)] {
                let p = dir.join("windows").join(format!("{}_{part}.csv", d.letter));
                io::write_windows(&p, ws)?;
                files.push(p);
            }
        }
        for &f in &plan.features {
            for (part, ws) in [("train", &d.train), ("test", &d.test)] {
                let p = dir.join("features").join(format!("{}{}_{part}.csv", d.letter, f.tag()));
                io::write_features(&p, &prep.matrix(f, ws))?;
                files.push(p);
            }
        }
    }

    let trained = train_cells(plan, &prep)?;
    let mut cells = Vec::with_capacity(trained.len());
    for (cell, json) in trained {
        let p = dir.join("models").join(format!("{}.json", cell.report.classifier));
        io::write_string(&p, &json)?;
        files.push(p);
        cells.push(cell);
    }

    let mut csv = format!("{}\n", EvalReport::CSV_HEADER);
    for c in &cells {
        csv.push_str(&c.report.csv_row());
        csv.push('\n');
    }
    let p = dir.join("reports.csv");
    io::write_string(&p, &csv)?;
    files.push(p);
    let p = dir.join("reports.json");
    io::write_json(
        &p,
        &ReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            reports: cells.iter().map(|c| c.report.clone()).collect(),
        },
    )?;
    files.push(p);

    // Different datasets have different test sets, so those comparisons are
    // unpaired; models and feature sets on one dataset share the test set.
    let grids = [
        (
            "delong_datasets.csv",
            delong_grid(&cells, |c| (c.features, c.model), |c| format!("{}{}", c.features.tag(), c.model.letter()), false),
        ),
        (
            "delong_models.csv",
            delong_grid(&cells, |c| (c.dataset, c.features), |c| format!("{}{}", c.dataset, c.features.tag()), true),
        ),
        (
            "delong_features.csv",
            delong_grid(&cells, |c| (c.dataset, c.model), |c| format!("{}{}", c.dataset, c.model.letter()), true),
        ),
    ];
    for (name, text) in grids {
        let p = dir.join(name);
        io::write_string(&p, &text)?;
        files.push(p);
    }

    let dropped: Vec<&Dropped> = prep.datasets.iter().flat_map(|d| &d.dropped).collect();
    let datasets: Vec<serde_json::Value> = prep
        .datasets
        .iter()
        .map(|d| {
            serde_json::json!({
                "dataset": d.letter.to_string(),
                "train_windows": d.train.len(),
                "test_windows": d.test.len(),
            })
        })
        .collect();
    let manifest = dir.join("manifest.json");
    let mut names: Vec<String> = files.iter().map(|p| rel(&dir, p)).collect();
    names.sort();
    io::write_json(
        &manifest,
        &serde_json::json!({
            "schema_version": REPORT_SCHEMA_VERSION,
            "command": "experiment",
            "plan": plan,
            "datasets": datasets,
            "dropped_windows": dropped,
            "files": names,
        }),
    )?;
    files.push(manifest);
    progress.finish()?;
    Ok(ExperimentOutput { dir, cells, files })
}

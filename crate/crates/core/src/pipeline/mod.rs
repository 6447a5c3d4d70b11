//! End-to-end commands: simulate, experiment, sweep, classify-empirical and
//! mwu-features.

pub mod config;
mod empirical;
mod experiment;
mod sweep;

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{build_mixed, partition, slice_all, Label, LabeledWindow, SplitSpec, WINDOW_LEN};
use crate::features::{featurize, FeatureMatrix, FeatureSet};
use crate::io;
use crate::metrics::{mann_whitney_u, Alternative};
use crate::rng;
use crate::sde::{generate_dataset, DatasetSpec, NoiseKind, Trajectory};

pub use config::{EmpiricalConfig, EmpiricalSource, MwuConfig, Overrides, Plan, RunConfig, SweepKind};
pub use empirical::{cmd_classify_empirical, format_accuracy, EmpiricalRecord};
pub use experiment::{classifier_name, cmd_experiment, load_reports, Cell, ExperimentOutput};
pub use sweep::{cmd_sweep, schedule, sweep_cell, SweepReport, SweepRow, SWEEP_HEADER};

/// Version stamped into every JSON report.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{stage}: {message}")]
    Stage { stage: String, message: String },
    #[error("stale or foreign file {path}: {reason}")]
    Schema { path: String, reason: String },
}

impl From<io::IoError> for PipelineError {
    fn from(e: io::IoError) -> Self {
        PipelineError::Io(e.to_string())
    }
}

pub(crate) fn stage<E: std::fmt::Display>(stage: impl Into<String>) -> impl FnOnce(E) -> PipelineError {
    let stage = stage.into();
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

/// Sets the global worker count from `EWS_WORKERS` when present.
pub fn init_workers() -> Result<(), PipelineError> {
    if let Ok(v) = std::env::var("EWS_WORKERS") {
        let n: usize = v.trim().parse().map_err(|_| PipelineError::Config {
            field: "EWS_WORKERS",
            reason: format!("`{v}` is not a worker count"),
        })?;
        // Ignored if a pool already exists (e.g. repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Marks a command directory as incomplete until `finish` is called.
pub(crate) struct Progress {
    marker: PathBuf,
}

impl Progress {
    pub(crate) fn start(dir: &Path, name: &str) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io(format!("{}: {e}", dir.display())))?;
        let marker = dir.join(name);
        io::write_string(&marker, "run did not finish\n")?;
        Ok(Progress { marker })
    }

    pub(crate) fn finish(self) -> Result<(), PipelineError> {
        std::fs::remove_file(&self.marker).map_err(|e| PipelineError::Io(format!("{}: {e}", self.marker.display())))
    }
}

pub fn dataset_spec(plan: &Plan, kind: NoiseKind) -> DatasetSpec {
    let mut spec = DatasetSpec::nominal(kind);
    spec.sim.horizon = plan.horizon;
    spec.sim.dt = plan.dt;
    spec.calib = plan.calibration;
    spec
}

pub fn simulate_kind(plan: &Plan, kind: NoiseKind) -> Result<Vec<Trajectory>, PipelineError> {
    let seed = rng::labeled_seed(plan.seed, &format!("simulate-{}", kind.letter()));
    generate_dataset(
        &dataset_spec(plan, kind),
        plan.replicates_per_class,
        plan.replicates_per_class,
        seed,
    )
    .map_err(stage(format!("simulate {}", kind.name())))
}

/// A window dropped because a feature could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub window_id: String,
    pub feature_set: String,
    pub error: String,
}

/// One dataset (`W`, `E`, `D` or `M`) after slicing and splitting.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub letter: char,
    pub train: Vec<LabeledWindow>,
    pub test: Vec<LabeledWindow>,
    pub dropped: Vec<Dropped>,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub datasets: Vec<PreparedDataset>,
    /// Feature rows keyed by window id, per feature set.
    pub rows: HashMap<FeatureSet, HashMap<String, Vec<f64>>>,
}

impl Prepared {
    pub fn matrix(&self, set: FeatureSet, windows: &[LabeledWindow]) -> FeatureMatrix {
        let table = &self.rows[&set];
        let mut m = FeatureMatrix::empty(set);
        for w in windows {
            m.rows.push(table[&w.source_id].clone());
            m.labels.push(w.label);
            m.ids.push(w.source_id.clone());
        }
        m
    }
}

/// Simulates, slices, featurises and splits every configured dataset.
/// Windows that fail any requested feature set are dropped before the
/// split so all feature sets see the same windows.
pub fn prepare(plan: &Plan) -> Result<Prepared, PipelineError> {
    let mut rows: HashMap<FeatureSet, HashMap<String, Vec<f64>>> = HashMap::new();
    let mut sources: Vec<(char, Vec<LabeledWindow>, Vec<Dropped>)> = Vec::new();
    for &kind in &plan.noise {
        let letter = kind.letter();
        let trajs = simulate_kind(plan, kind)?;
        let windows = slice_all(
            &trajs,
            WINDOW_LEN,
            rng::labeled_seed(plan.seed, &format!("slice-{letter}")),
            &letter.to_string(),
        )
        .map_err(stage(format!("slice {}", kind.name())))?;
        let mut dropped = Vec::new();
        let mut bad = BTreeSet::new();
        for &set in &plan.features {
            let (m, failures) = featurize(&windows, set, false).map_err(stage("featurise"))?;
            for f in failures {
                bad.insert(f.window_id.clone());
                dropped.push(Dropped {
                    window_id: f.window_id,
                    feature_set: set.tag().to_string(),
                    error: f.error,
                });
            }
            let table = rows.entry(set).or_default();
            for (id, r) in m.ids.into_iter().zip(m.rows) {
                table.insert(id, r);
            }
        }
        let kept: Vec<LabeledWindow> = windows.into_iter().filter(|w| !bad.contains(&w.source_id)).collect();
        sources.push((letter, kept, dropped));
    }

    let mut pools: Vec<(char, Vec<LabeledWindow>, Vec<Dropped>)> = sources.clone();
    if plan.mixed {
        let refs: Vec<&[LabeledWindow]> = sources.iter().map(|(_, w, _)| w.as_slice()).collect();
        let mut r = rng::from_seed(rng::labeled_seed(plan.seed, "mixed"));
        let mixed = build_mixed(&refs, plan.mixed_per_source, &mut r).map_err(stage("build MixedN"))?;
        pools.push(('M', mixed, Vec::new()));
    }

    let mut datasets = Vec::new();
    for (letter, windows, dropped) in pools {
        let spec = SplitSpec {
            train_per_class: plan.train_per_class,
            test_per_class: plan.test_per_class,
            seed: rng::labeled_seed(plan.seed, &format!("split-{letter}")),
        };
        let (train, test) = partition(&windows, &spec).map_err(stage(format!("split {letter}")))?;
        datasets.push(PreparedDataset {
            letter,
            train,
            test,
            dropped,
        });
    }
    Ok(Prepared { datasets, rows })
}

/// `simulate`: trajectory CSV and JSON sidecar per noise kind.
pub fn cmd_simulate(plan: &Plan) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = plan.out.join("simulate");
    let progress = Progress::start(&dir, "INCOMPLETE")?;
    let mut written = Vec::new();
    for &kind in &plan.noise {
        let trajs = simulate_kind(plan, kind)?;
        let letter = kind.letter();
        let csv = dir.join(format!("trajectories_{letter}.csv"));
        let json = dir.join(format!("trajectories_{letter}.json"));
        io::write_trajectories(&csv, &json, &letter.to_string(), &trajs)?;
        written.push(csv);
        written.push(json);
    }
    io::write_json(
        &dir.join("manifest.json"),
        &serde_json::json!({
            "schema_version": REPORT_SCHEMA_VERSION,
            "command": "simulate",
            "plan": plan,
            "files": written.iter().map(|p| p.file_name().unwrap().to_string_lossy().to_string()).collect::<Vec<_>>(),
        }),
    )?;
    progress.finish()?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwuRow {
    pub feature: String,
    pub n_t: usize,
    pub n_n: usize,
    pub u: f64,
    pub p_value: f64,
}

/// Two-sided Mann-Whitney U of each feature between `T` and `N` rows.
pub fn mwu_table(m: &FeatureMatrix) -> Result<Vec<MwuRow>, PipelineError> {
    let n_t = m.count(Label::T);
    let n_n = m.count(Label::N);
    if n_t == 0 || n_n == 0 {
        return Err(PipelineError::Stage {
            stage: "mwu".into(),
            message: "feature matrix holds a single label".into(),
        });
    }
    (0..m.n_cols())
        .into_par_iter()
        .map(|j| {
            let t: Vec<f64> = m.rows.iter().zip(&m.labels).filter(|(_, l)| **l == Label::T).map(|(r, _)| r[j]).collect();
            let n: Vec<f64> = m.rows.iter().zip(&m.labels).filter(|(_, l)| **l == Label::N).map(|(r, _)| r[j]).collect();
            let r = mann_whitney_u(&t, &n, Alternative::TwoSided).map_err(stage("mwu"))?;
            Ok(MwuRow {
                feature: m.names()[j].to_string(),
                n_t,
                n_n,
                u: r.u,
                p_value: r.p_value,
            })
        })
        .collect()
}

/// `mwu-features`: per-feature p-values for each feature CSV.
pub fn cmd_mwu_features(plan: &Plan) -> Result<Vec<(PathBuf, Vec<MwuRow>)>, PipelineError> {
    let inputs: Vec<PathBuf> = if plan.mwu.matrices.is_empty() {
        let dir = plan.out.join("experiment").join("features");
        let mut found: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| PipelineError::Io(format!("{}: {e} (run `experiment` first or list mwu.matrices)", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with("_train.csv"))
            .collect();
        found.sort();
        found
    } else {
        plan.mwu.matrices.clone()
    };
    if inputs.is_empty() {
        return Err(PipelineError::Io("no feature matrices to test".into()));
    }
    let dir = plan.out.join("mwu");
    let progress = Progress::start(&dir, "INCOMPLETE")?;
    let mut out = Vec::new();
    for path in inputs {
        let m = io::read_features(&path)?;
        let rows = mwu_table(&m)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        let mut text = String::from("feature,n_t,n_n,u,p_value\n");
        for r in &rows {
            text.push_str(&format!("{},{},{},{},{}\n", r.feature, r.n_t, r.n_n, r.u, r.p_value));
        }
        let target = dir.join(format!("{stem}.csv"));
        io::write_string(&target, &text)?;
        out.push((target, rows));
    }
    progress.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mwu_on_identical_classes_is_null() {
        let mut m = FeatureMatrix::empty(FeatureSet::EWSI5);
        for i in 0..40 {
            let v = (i / 2) as f64;
            m.rows.push(vec![v, v * 2.0, -v, v + 1.0, v * v]);
            m.labels.push(if i % 2 == 0 { Label::T } else { Label::N });
            m.ids.push(format!("w{i}"));
        }
        let rows = mwu_table(&m).unwrap();
        assert_eq!(rows.len(), 5);
        for r in rows {
            assert!(r.p_value > 0.99, "{r:?}");
        }
        let single = m.subset(&[0, 2, 4]);
        assert!(mwu_table(&single).is_err());
    }

    #[test]
    fn missing_matrix_is_a_path_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            mwu: Some(MwuConfig {
                matrices: vec![dir.path().join("nope.csv")],
            }),
            ..RunConfig::default()
        };
        let plan = cfg
            .resolve(&Overrides {
                seed: Some(1),
                out: Some(dir.path().to_path_buf()),
                ..Overrides::default()
            })
            .unwrap();
        let err = cmd_mwu_features(&plan).unwrap_err();
        assert!(err.to_string().contains("nope.csv"), "{err}");
    }
}

//! Run configuration: a TOML file, the desk-scale preset and flag
//! overrides, resolved into a validated [`Plan`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::features::FeatureSet;
use crate::learners::{ModelKind, TrainConfig};
use crate::sde::{NoiseKind, ScheduleCalibration};

/// File-level configuration; absent fields fall back to the preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub desk_scale: Option<bool>,
    pub noise: Option<Vec<String>>,
    /// Build MixedN when two or more noise kinds are selected.
    pub mixed: Option<bool>,
    pub features: Option<Vec<String>>,
    pub models: Option<Vec<String>>,
    pub replicates_per_class: Option<usize>,
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    pub mixed_per_source: Option<usize>,
    pub sweep_kind: Option<String>,
    pub horizon: Option<usize>,
    pub dt: Option<f64>,
    pub write_windows: Option<bool>,
    pub calibration: Option<ScheduleCalibration>,
    pub train: Option<TrainConfig>,
    pub empirical: Option<EmpiricalConfig>,
    pub mwu: Option<MwuConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmpiricalConfig {
    /// Directory of trained model JSON files; defaults to the experiment's.
    pub models_dir: Option<PathBuf>,
    /// Classifier names to apply; empty means every model in the directory.
    pub classifiers: Vec<String>,
    pub truncate_days: Option<usize>,
    pub scale_factor: Option<f64>,
    pub sources: Vec<EmpiricalSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalSource {
    pub name: String,
    pub path: PathBuf,
    /// `incidence` (date,count) or `prevalence` (date,cumulative,deaths,recovered).
    #[serde(default = "default_schema")]
    pub schema: String,
    /// `T` windows come from bracketed Re < 1 runs, `N` windows from the
    /// final Re < 1 suffix.
    pub label: String,
    pub si_mean: f64,
    pub si_sd: f64,
    pub min_len: Option<usize>,
    pub n_windows: Option<usize>,
}

fn default_schema() -> String {
    "incidence".into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MwuConfig {
    /// Feature CSVs to test; empty means the experiment's training matrices.
    pub matrices: Vec<PathBuf>,
}

/// Command-line overrides; every `Some` wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub desk_scale: bool,
    pub noise: Option<Vec<String>>,
    pub features: Option<Vec<String>>,
    pub models: Option<Vec<String>>,
    pub sweep_kind: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepKind {
    Rolling,
    Expanding,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Rolling => "rolling",
            SweepKind::Expanding => "expanding",
        }
    }

    pub fn parse(s: &str) -> Option<Vec<SweepKind>> {
        match s.to_ascii_lowercase().as_str() {
            "rolling" => Some(vec![SweepKind::Rolling]),
            "expanding" => Some(vec![SweepKind::Expanding]),
            "both" | "all" => Some(vec![SweepKind::Rolling, SweepKind::Expanding]),
            _ => None,
        }
    }
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    pub desk_scale: bool,
    pub noise: Vec<NoiseKind>,
    pub mixed: bool,
    pub features: Vec<FeatureSet>,
    pub models: Vec<ModelKind>,
    pub replicates_per_class: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub mixed_per_source: usize,
    pub sweep_kinds: Vec<SweepKind>,
    pub horizon: usize,
    pub dt: f64,
    pub write_windows: bool,
    pub calibration: ScheduleCalibration,
    pub train: TrainConfig,
    #[serde(skip)]
    pub empirical: EmpiricalConfig,
    #[serde(skip)]
    pub mwu: MwuConfig,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> PipelineError {
    PipelineError::Config {
        field,
        reason: reason.into(),
    }
}

fn parse_list<T>(
    field: &'static str,
    items: &[String],
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>, PipelineError>
where
    T: PartialEq,
{
    let mut out = Vec::new();
    for raw in items.iter().flat_map(|s| s.split(',')) {
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        let v = parse(s).ok_or_else(|| invalid(field, format!("unknown value `{s}`")))?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(invalid(field, "must name at least one value"));
    }
    Ok(out)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies the preset, then file values, then flags, and validates.
    pub fn resolve(&self, flags: &Overrides) -> Result<Plan, PipelineError> {
        let desk = flags.desk_scale || self.desk_scale.unwrap_or(false);
        let seed = flags
            .seed
            .or(self.seed)
            .ok_or_else(|| invalid("seed", "a seed is required"))?;
        let out = flags
            .out
            .clone()
            .or_else(|| self.out.clone())
            .ok_or_else(|| invalid("out", "an output directory is required"))?;

        let noise_default: Vec<String> = if desk {
            vec!["White".into(), "Environmental".into()]
        } else {
            NoiseKind::ALL.iter().map(|k| k.name().to_string()).collect()
        };
        let noise = parse_list(
            "noise",
            flags.noise.as_ref().or(self.noise.as_ref()).unwrap_or(&noise_default),
            NoiseKind::parse,
        )?;
        let all_features = vec!["22".to_string(), "5".to_string()];
        let features = parse_list(
            "features",
            flags.features.as_ref().or(self.features.as_ref()).unwrap_or(&all_features),
            FeatureSet::parse,
        )?;
        let all_models: Vec<String> = ModelKind::ALL.iter().map(|m| m.name().to_string()).collect();
        let models = parse_list(
            "models",
            flags.models.as_ref().or(self.models.as_ref()).unwrap_or(&all_models),
            ModelKind::parse,
        )?;
        let sweep_raw = flags
            .sweep_kind
            .clone()
            .or_else(|| self.sweep_kind.clone())
            .unwrap_or_else(|| "both".into());
        let sweep_kinds =
            SweepKind::parse(&sweep_raw).ok_or_else(|| invalid("sweep_kind", format!("unknown sweep `{sweep_raw}`")))?;

        let (train_d, test_d) = if desk { (600, 150) } else { (6000, 1200) };
        let train_per_class = self.train_per_class.unwrap_or(train_d);
        let test_per_class = self.test_per_class.unwrap_or(test_d);
        if train_per_class == 0 {
            return Err(invalid("train_per_class", "must be >= 1"));
        }
        if test_per_class == 0 {
            return Err(invalid("test_per_class", "must be >= 1"));
        }
        let needed = train_per_class + test_per_class;
        // A little slack so the odd unfeaturisable window does not starve
        // the split.
        let slack = (needed / 50).max(2);
        let replicates_per_class = self.replicates_per_class.unwrap_or(needed + slack);
        if replicates_per_class < needed {
            return Err(invalid(
                "replicates_per_class",
                format!("{replicates_per_class} < train + test = {needed}"),
            ));
        }
        let mixed = self.mixed.unwrap_or(true) && noise.len() >= 2;
        let mixed_per_source = self.mixed_per_source.unwrap_or(needed.div_ceil(noise.len().max(1)));
        if mixed && mixed_per_source * noise.len() < needed {
            return Err(invalid(
                "mixed_per_source",
                format!("{mixed_per_source} per source cannot fill train + test = {needed}"),
            ));
        }
        let horizon = self.horizon.unwrap_or(1500);
        if horizon < crate::dataset::WINDOW_LEN {
            return Err(invalid("horizon", "must be >= 400"));
        }
        let dt = self.dt.unwrap_or(0.01);
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(invalid("dt", "must be in (0, 1]"));
        }
        let train = self.train.clone().unwrap_or_default();
        train
            .validate()
            .map_err(|e| invalid("train", e.to_string()))?;
        Ok(Plan {
            seed,
            out,
            desk_scale: desk,
            noise,
            mixed,
            features,
            models,
            replicates_per_class,
            train_per_class,
            test_per_class,
            mixed_per_source,
            sweep_kinds,
            horizon,
            dt,
            write_windows: self.write_windows.unwrap_or(true),
            calibration: self.calibration.unwrap_or_default(),
            train,
            empirical: self.empirical.clone().unwrap_or_default(),
            mwu: self.mwu.clone().unwrap_or_default(),
        })
    }
}

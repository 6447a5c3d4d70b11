//! Labelled windows: slicing trajectories, mixing noise models, stratified
//! splits and the rolling/expanding earliness families.
//!
//! Index arithmetic is 1-based and inclusive, `I[a..b]` meaning
//! `I(a), …, I(b)`.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::sde::Trajectory;

pub const WINDOW_LEN: usize = 400;
pub const ROLLING_LEN: usize = 100;
pub const EXPANDING_GAP: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("cannot slice `{source_id}`: {reason}")]
    Slice { source_id: String, reason: String },
    #[error("not enough {label} windows: need {needed}, have {available}")]
    Insufficient {
        label: Label,
        needed: usize,
        available: usize,
    },
    #[error("expected a window of length {expected}, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("source `{0}` carries both labels")]
    MixedSource(String),
    #[error("counts must be >= 1")]
    ZeroCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    /// Pre-transition (outbreak ahead).
    T,
    /// Null bifurcation (no outbreak).
    N,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::T
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::T => "T",
            Label::N => "N",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "T" | "t" => Some(Label::T),
            "N" | "n" => Some(Label::N),
            _ => None,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledWindow {
    pub values: Vec<f64>,
    pub label: Label,
    pub source_id: String,
    /// Points between the window end and the transition (0 for `N`).
    pub gap: usize,
    pub length: usize,
}

impl LabeledWindow {
    pub fn new(values: Vec<f64>, label: Label, source_id: impl Into<String>, gap: usize) -> Self {
        let length = values.len();
        LabeledWindow {
            values,
            label,
            source_id: source_id.into(),
            gap,
            length,
        }
    }

    /// Sub-window `[start..=end]` (1-based, inclusive) of this window.
    fn sub(&self, start: usize, end: usize, gap: usize) -> LabeledWindow {
        debug_assert!(start >= 1 && end <= self.values.len() && start <= end);
        LabeledWindow::new(self.values[start - 1..end].to_vec(), self.label, self.source_id.clone(), gap)
    }
}

/// `I[T−L+1 .. T]` labelled `T`.
pub fn slice_transcritical(traj: &Trajectory, len: usize, source_id: &str) -> Result<LabeledWindow, DatasetError> {
    let t = traj.transition_time.ok_or_else(|| DatasetError::Slice {
        source_id: source_id.to_string(),
        reason: "trajectory has no transition".into(),
    })?;
    if t < len || t > traj.horizon() {
        return Err(DatasetError::Slice {
            source_id: source_id.to_string(),
            reason: format!("transition at {t} leaves fewer than {len} points"),
        });
    }
    Ok(LabeledWindow::new(
        traj.incidence[t - len..t].to_vec(),
        Label::T,
        source_id,
        0,
    ))
}

/// `I[t−L+1 .. t]` labelled `N`, with `t` uniform on `[L, horizon]`.
pub fn slice_null<R: Rng + ?Sized>(
    traj: &Trajectory,
    len: usize,
    rng: &mut R,
    source_id: &str,
) -> Result<LabeledWindow, DatasetError> {
    if traj.transition_time.is_some() {
        return Err(DatasetError::Slice {
            source_id: source_id.to_string(),
            reason: "trajectory is transcritical".into(),
        });
    }
    let horizon = traj.horizon();
    if len == 0 || horizon < len {
        return Err(DatasetError::Slice {
            source_id: source_id.to_string(),
            reason: format!("horizon {horizon} shorter than window {len}"),
        });
    }
    let end = rng.random_range(len..=horizon);
    Ok(LabeledWindow::new(
        traj.incidence[end - len..end].to_vec(),
        Label::N,
        source_id,
        0,
    ))
}

/// Slices every replicate of one noise model. `prefix` namespaces source ids
/// (e.g. `"W"`); null end points come from streams keyed by replicate index.
pub fn slice_all(
    trajectories: &[Trajectory],
    len: usize,
    seed: u64,
    prefix: &str,
) -> Result<Vec<LabeledWindow>, DatasetError> {
    trajectories
        .iter()
        .enumerate()
        .map(|(idx, traj)| {
            let id = format!("{prefix}-{idx:05}");
            match traj.transition_time {
                Some(_) => slice_transcritical(traj, len, &id),
                None => {
                    let mut r = rng::stream(rng::labeled_seed(seed, "null-end"), idx as u64);
                    slice_null(traj, len, &mut r, &id)
                }
            }
        })
        .collect()
}

fn by_label(windows: &[LabeledWindow], label: Label) -> Vec<&LabeledWindow> {
    windows.iter().filter(|w| w.label == label).collect()
}

/// Draws `per_class` windows of each label, without replacement, from each
/// source set.
pub fn build_mixed<R: Rng + ?Sized>(
    sources: &[&[LabeledWindow]],
    per_class: usize,
    rng: &mut R,
) -> Result<Vec<LabeledWindow>, DatasetError> {
    if per_class == 0 {
        return Err(DatasetError::ZeroCount);
    }
    let mut out = Vec::with_capacity(sources.len() * 2 * per_class);
    for source in sources {
        for label in [Label::T, Label::N] {
            let pool = by_label(source, label);
            if pool.len() < per_class {
                return Err(DatasetError::Insufficient {
                    label,
                    needed: per_class,
                    available: pool.len(),
                });
            }
            let picked = rand::seq::index::sample(rng, pool.len(), per_class);
            let mut picked: Vec<usize> = picked.into_vec();
            picked.sort_unstable();
            out.extend(picked.into_iter().map(|i| pool[i].clone()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

/// Stratified split by label with train and test disjoint by source id.
/// Sources are shuffled per label; the first `train_per_class` go to train,
/// the next `test_per_class` to test. Output keeps input order.
pub fn partition(
    windows: &[LabeledWindow],
    spec: &SplitSpec,
) -> Result<(Vec<LabeledWindow>, Vec<LabeledWindow>), DatasetError> {
    if spec.train_per_class == 0 || spec.test_per_class == 0 {
        return Err(DatasetError::ZeroCount);
    }
    let mut source_label: HashMap<&str, Label> = HashMap::new();
    for w in windows {
        if let Some(prev) = source_label.insert(&w.source_id, w.label) {
            if prev != w.label {
                return Err(DatasetError::MixedSource(w.source_id.clone()));
            }
        }
    }

    let mut train_ids = BTreeSet::new();
    let mut test_ids = BTreeSet::new();
    for (k, label) in [Label::T, Label::N].into_iter().enumerate() {
        let mut ids: Vec<&str> = Vec::new();
        let mut seen = BTreeSet::new();
        for w in windows.iter().filter(|w| w.label == label) {
            if seen.insert(w.source_id.as_str()) {
                ids.push(&w.source_id);
            }
        }
        let needed = spec.train_per_class + spec.test_per_class;
        if ids.len() < needed {
            return Err(DatasetError::Insufficient {
                label,
                needed,
                available: ids.len(),
            });
        }
        let mut r = rng::stream(rng::labeled_seed(spec.seed, "partition"), k as u64);
        ids.shuffle(&mut r);
        train_ids.extend(ids[..spec.train_per_class].iter().copied());
        test_ids.extend(ids[spec.train_per_class..needed].iter().copied());
    }

    let train = windows
        .iter()
        .filter(|w| train_ids.contains(w.source_id.as_str()))
        .cloned()
        .collect();
    let test = windows
        .iter()
        .filter(|w| test_ids.contains(w.source_id.as_str()))
        .cloned()
        .collect();
    Ok((train, test))
}

/// Gap offsets `D = 0, 5, …, 300` of the rolling-window sweep.
pub fn rolling_offsets() -> Vec<usize> {
    (0..=300).step_by(5).collect()
}

/// Lengths `L = 5, 10, …, 370` of the expanding-window sweep.
pub fn expanding_lengths() -> Vec<usize> {
    (5..=370).step_by(5).collect()
}

fn check_parent(window: &LabeledWindow) -> Result<(), DatasetError> {
    if window.values.len() != WINDOW_LEN {
        return Err(DatasetError::WrongLength {
            expected: WINDOW_LEN,
            actual: window.values.len(),
        });
    }
    Ok(())
}

fn gap_for(label: Label, offset: usize) -> usize {
    match label {
        Label::T => offset,
        Label::N => 0,
    }
}

/// Length-100 window ending `D` points before the parent's end.
pub fn rolling_window(window: &LabeledWindow, offset: usize) -> Result<LabeledWindow, DatasetError> {
    check_parent(window)?;
    if offset + ROLLING_LEN > WINDOW_LEN {
        return Err(DatasetError::WrongLength {
            expected: WINDOW_LEN,
            actual: offset + ROLLING_LEN,
        });
    }
    let end = WINDOW_LEN - offset;
    Ok(window.sub(end - ROLLING_LEN + 1, end, gap_for(window.label, offset)))
}

/// All 61 rolling sub-windows, ordered by increasing `D`.
pub fn rolling_windows(window: &LabeledWindow) -> Result<Vec<LabeledWindow>, DatasetError> {
    rolling_offsets().into_iter().map(|d| rolling_window(window, d)).collect()
}

/// Length-`L` window ending 30 points before the parent's end.
pub fn expanding_window(window: &LabeledWindow, len: usize) -> Result<LabeledWindow, DatasetError> {
    check_parent(window)?;
    let end = WINDOW_LEN - EXPANDING_GAP;
    if len == 0 || len > end {
        return Err(DatasetError::WrongLength {
            expected: end,
            actual: len,
        });
    }
    Ok(window.sub(end - len + 1, end, gap_for(window.label, EXPANDING_GAP)))
}

/// All 74 expanding sub-windows, ordered by increasing `L`.
pub fn expanding_windows(window: &LabeledWindow) -> Result<Vec<LabeledWindow>, DatasetError> {
    expanding_lengths().into_iter().map(|l| expanding_window(window, l)).collect()
}

//! CSV and JSON formats for trajectories, windows and feature matrices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Label, LabeledWindow};
use crate::features::{FeatureMatrix, FeatureSet};
use crate::sde::{SirParams, Trajectory};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs { path: String, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Format { path: String, line: usize, msg: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs {
        path: path.display().to_string(),
        source,
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(fs_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(fs_err(path))?))
}

pub fn write_string(path: &Path, text: &str) -> Result<(), IoError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(fs_err(path))?;
    w.flush().map_err(fs_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_string(path, &text)
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(fs_err(path))
}

/// Per-replicate sidecar record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub replicate_id: String,
    pub seed: u64,
    pub transition_time: Option<usize>,
    pub params: SirParams,
}

/// Long-format `replicate_id,t,I` rows plus a JSON sidecar.
pub fn write_trajectories(csv_path: &Path, json_path: &Path, prefix: &str, trajs: &[Trajectory]) -> Result<(), IoError> {
    let mut w = create(csv_path)?;
    let mut meta = Vec::with_capacity(trajs.len());
    let e = |err| IoError::Fs {
        path: csv_path.display().to_string(),
        source: err,
    };
    writeln!(w, "replicate_id,t,I").map_err(e)?;
    for (idx, tr) in trajs.iter().enumerate() {
        let id = format!("{prefix}-{idx:05}");
        for (k, v) in tr.incidence.iter().enumerate() {
            writeln!(w, "{id},{},{v}", k + 1).map_err(e)?;
        }
        meta.push(TrajectoryMeta {
            replicate_id: id,
            seed: tr.seed,
            transition_time: tr.transition_time,
            params: tr.params,
        });
    }
    w.flush().map_err(e)?;
    write_json(json_path, &meta)
}

/// `window_id,label,gap,length,v1..vL`, shorter windows padded with empty
/// fields up to the longest.
pub fn write_windows(path: &Path, windows: &[LabeledWindow]) -> Result<(), IoError> {
    let width = windows.iter().map(|w| w.values.len()).max().unwrap_or(0);
    let mut out = create(path)?;
    let e = |err| IoError::Fs {
        path: path.display().to_string(),
        source: err,
    };
    let mut header = String::from("window_id,label,gap,length");
    for k in 1..=width {
        header.push_str(&format!(",v{k}"));
    }
    writeln!(out, "{header}").map_err(e)?;
    for w in windows {
        let mut line = format!("{},{},{},{}", w.source_id, w.label, w.gap, w.length);
        for k in 0..width {
            line.push(',');
            if let Some(v) = w.values.get(k) {
                line.push_str(&v.to_string());
            }
        }
        writeln!(out, "{line}").map_err(e)?;
    }
    out.flush().map_err(e)
}

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> IoError {
    IoError::Format {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

pub fn read_windows(path: &Path) -> Result<Vec<LabeledWindow>, IoError> {
    let file = File::open(path).map_err(fs_err(path))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?
        .map_err(fs_err(path))?;
    if !header.starts_with("window_id,label,gap,length") {
        return Err(format_err(path, 1, "not a window file"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(fs_err(path))?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 4 {
            return Err(format_err(path, lineno, "too few fields"));
        }
        let label = Label::parse(f[1]).ok_or_else(|| format_err(path, lineno, format!("bad label `{}`", f[1])))?;
        let gap: usize = f[2].parse().map_err(|_| format_err(path, lineno, "bad gap"))?;
        let length: usize = f[3].parse().map_err(|_| format_err(path, lineno, "bad length"))?;
        if f.len() < 4 + length {
            return Err(format_err(path, lineno, "fewer values than length"));
        }
        let values = f[4..4 + length]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| format_err(path, lineno, "bad value"))?;
        out.push(LabeledWindow::new(values, label, f[0], gap));
    }
    Ok(out)
}

/// `window_id,label,<feature names>`.
pub fn write_features(path: &Path, m: &FeatureMatrix) -> Result<(), IoError> {
    let mut out = create(path)?;
    let e = |err| IoError::Fs {
        path: path.display().to_string(),
        source: err,
    };
    writeln!(out, "window_id,label,{}", m.names().join(",")).map_err(e)?;
    for ((id, label), row) in m.ids.iter().zip(&m.labels).zip(&m.rows) {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{id},{label},{}", vals.join(",")).map_err(e)?;
    }
    out.flush().map_err(e)
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix, IoError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| format_err(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "window_id" || cols[1] != "label" {
        return Err(format_err(path, 1, "not a feature file"));
    }
    let names = &cols[2..];
    let set = [FeatureSet::SF22, FeatureSet::EWSI5]
        .into_iter()
        .find(|s| s.names() == names)
        .ok_or_else(|| format_err(path, 1, "unknown feature columns"))?;
    let mut m = FeatureMatrix::empty(set);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(format_err(path, lineno, "wrong field count"));
        }
        let label = Label::parse(f[1]).ok_or_else(|| format_err(path, lineno, "bad label"))?;
        let row = f[2..]
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| format_err(path, lineno, "bad value"))?;
        m.ids.push(f[0].to_string());
        m.labels.push(label);
        m.rows.push(row);
    }
    Ok(m)
}

//! Python bindings: simulation, features, metrics, the Re estimator and the
//! experiment command.

use std::path::PathBuf;

use chrono::NaiveDate;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ews_core::features::{compute_ewsi5, compute_sf22, EWSI5_NAMES, SF22_NAMES};
use ews_core::incidence::{estimate_re as re_core, Cadence, IncidenceSeries, ReConfig, SerialInterval};
use ews_core::metrics::{self, Alternative};
use ews_core::pipeline::{cmd_experiment, Overrides, RunConfig};
use ews_core::sde::{self, NoiseKind, SimulationConfig, SirParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Simulates one replicate. Returns `(incidence, transition_time)`.
#[pyfunction]
#[pyo3(signature = (noise, beta0, beta1, horizon=1500, dt=0.01, seed=0, state_floor=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    noise: &str,
    beta0: f64,
    beta1: f64,
    horizon: usize,
    dt: f64,
    seed: u64,
    state_floor: Option<f64>,
) -> PyResult<(Vec<f64>, Option<usize>)> {
    let kind = NoiseKind::parse(noise).ok_or_else(|| PyValueError::new_err(format!("unknown noise `{noise}`")))?;
    let params = SirParams::nominal(kind).with_schedule(beta0, beta1);
    let config = SimulationConfig {
        horizon,
        dt,
        seed,
        state_floor: state_floor.unwrap_or(SimulationConfig::nominal(kind).state_floor),
    };
    let traj = py.detach(|| sde::simulate(&params, &config)).map_err(value_err)?;
    Ok((traj.incidence, traj.transition_time))
}

#[pyfunction]
fn ewsi5(series: Vec<f64>) -> PyResult<Vec<f64>> {
    compute_ewsi5(&series).map(|f| f.to_vec()).map_err(value_err)
}

#[pyfunction]
fn sf22(series: Vec<f64>) -> PyResult<Vec<f64>> {
    compute_sf22(&series).map(|f| f.to_vec()).map_err(value_err)
}

/// Feature names for `"5"` or `"22"`.
#[pyfunction]
fn feature_names(set: &str) -> PyResult<Vec<&'static str>> {
    match set {
        "5" => Ok(EWSI5_NAMES.to_vec()),
        "22" => Ok(SF22_NAMES.to_vec()),
        _ => Err(PyValueError::new_err(format!("unknown feature set `{set}`"))),
    }
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    metrics::roc_auc(&scores, &labels).map_err(value_err)
}

/// Paired DeLong test. Returns `(auc_a, auc_b, z, p_value)`.
#[pyfunction]
fn delong_test(a: Vec<f64>, b: Vec<f64>, labels: Vec<bool>) -> PyResult<(f64, f64, f64, f64)> {
    let r = metrics::delong_test(&a, &b, &labels).map_err(value_err)?;
    Ok((r.auc_a, r.auc_b, r.z, r.p_value))
}

/// Returns `(u, p_value)`.
#[pyfunction]
#[pyo3(signature = (x, y, alternative="two-sided"))]
fn mann_whitney_u(x: Vec<f64>, y: Vec<f64>, alternative: &str) -> PyResult<(f64, f64)> {
    let alt = match alternative {
        "two-sided" => Alternative::TwoSided,
        "less" => Alternative::Less,
        "greater" => Alternative::Greater,
        _ => return Err(PyValueError::new_err(format!("unknown alternative `{alternative}`"))),
    };
    let r = metrics::mann_whitney_u(&x, &y, alt).map_err(value_err)?;
    Ok((r.u, r.p_value))
}

#[pyfunction]
#[pyo3(signature = (p_hat, n, level=0.95))]
fn accuracy_ci(p_hat: f64, n: usize, level: f64) -> PyResult<f64> {
    metrics::accuracy_ci(p_hat, n, level).map_err(value_err)
}

/// Posterior mean Re per day for a daily count series; `None` where the
/// estimate is undefined.
#[pyfunction]
#[pyo3(signature = (counts, si_mean=6.3, si_sd=4.2, window=7))]
fn estimate_re(counts: Vec<f64>, si_mean: f64, si_sd: f64, window: usize) -> PyResult<Vec<Option<f64>>> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let series = IncidenceSeries {
        dates: (0..counts.len()).map(|d| start + chrono::Days::new(d as u64)).collect(),
        counts: counts.into_iter().map(Some).collect(),
        cadence: Cadence::Daily,
    };
    let si = SerialInterval { mean: si_mean, sd: si_sd };
    let cfg = ReConfig {
        window,
        ..ReConfig::default()
    };
    re_core(&series, &si, &cfg).map(|r| r.re_mean).map_err(value_err)
}

/// Runs the experiment command and returns one dict per classifier.
#[pyfunction]
#[pyo3(signature = (out, seed, config=None, desk_scale=false, noise=None, features=None, models=None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    out: PathBuf,
    seed: u64,
    config: Option<PathBuf>,
    desk_scale: bool,
    noise: Option<Vec<String>>,
    features: Option<Vec<String>>,
    models: Option<Vec<String>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = match config {
        Some(p) => RunConfig::load(&p).map_err(value_err)?,
        None => RunConfig::default(),
    };
    let plan = cfg
        .resolve(&Overrides {
            seed: Some(seed),
            out: Some(out),
            desk_scale,
            noise,
            features,
            models,
            sweep_kind: None,
        })
        .map_err(value_err)?;
    let result = py
        .detach(|| cmd_experiment(&plan))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    result
        .cells
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            let r = &c.report;
            d.set_item("classifier", &r.classifier)?;
            d.set_item("dataset", &r.dataset)?;
            d.set_item("auc", r.auc)?;
            d.set_item("auc_ci_halfwidth", r.auc_ci_halfwidth)?;
            d.set_item("accuracy", r.accuracy)?;
            d.set_item("accuracy_ci_halfwidth", r.accuracy_ci_halfwidth)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn ews_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(ewsi5, m)?)?;
    m.add_function(wrap_pyfunction!(sf22, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(delong_test, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_u, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_ci, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_re, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

//! Stochastic SIR incidence generator.
//!
//! Three noise models share the deterministic SIR drift
//!
//! ```text
//! dS = (Λ − β(t)·S·I − μ·S) dt + …
//! dI = (β(t)·S·I − (α + μ)·I) dt + …
//! ```
//!
//! with a linearly drifting transmission rate `β(t) = β0 + β1·t`. The basic
//! reproduction number is `R0(t) = K·β(t)` with `K = Λ / (μ(α + μ))`, and a
//! replicate is transcritical when `R0` reaches 1 inside the recording horizon.
//! The recovered compartment does not feed back into `S` or `I` and is not
//! integrated.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdeError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("invalid simulation config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("state became non-finite at t = {time}")]
    Integration { time: f64 },
    #[error("no acceptable {regime:?} schedule after {attempts} draws")]
    CalibrationInfeasible { regime: Regime, attempts: usize },
    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<SdeError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseKind {
    White,
    Environmental,
    Demographic,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Environmental, NoiseKind::Demographic];

    /// Dataset letter used in classifier names (`W`, `E`, `D`).
    pub fn letter(self) -> char {
        match self {
            NoiseKind::White => 'W',
            NoiseKind::Environmental => 'E',
            NoiseKind::Demographic => 'D',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Environmental => "environmental",
            NoiseKind::Demographic => "demographic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "white" | "w" => Some(NoiseKind::White),
            "environmental" | "env" | "e" => Some(NoiseKind::Environmental),
            "demographic" | "dem" | "d" => Some(NoiseKind::Demographic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Transcritical,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    /// Recruitment rate Λ.
    pub lambda: f64,
    /// Death rate μ.
    pub mu: f64,
    /// Recovery rate α.
    pub alpha: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub noise_kind: NoiseKind,
    pub s0: f64,
    pub i0: f64,
}

impl SirParams {
    /// Nominal rates (`K = 10`) started at the disease-free state with one
    /// infective. The β schedule is left at zero for the caller to fill.
    pub fn nominal(noise_kind: NoiseKind) -> Self {
        let (sigma1, sigma2) = match noise_kind {
            NoiseKind::White | NoiseKind::Environmental => (0.05, 0.05),
            NoiseKind::Demographic => (0.0, 0.0),
        };
        SirParams {
            lambda: 1.0,
            mu: 0.2,
            alpha: 0.3,
            beta0: 0.0,
            beta1: 0.0,
            sigma1,
            sigma2,
            noise_kind,
            s0: 1.0 / 0.2,
            i0: 1.0,
        }
    }

    pub fn with_schedule(mut self, beta0: f64, beta1: f64) -> Self {
        self.beta0 = beta0;
        self.beta1 = beta1;
        self
    }

    pub fn validate(&self) -> Result<(), SdeError> {
        let bad = |field, reason: &str| {
            Err(SdeError::InvalidParams {
                field,
                reason: reason.to_string(),
            })
        };
        let all = [
            self.lambda, self.mu, self.alpha, self.beta0, self.beta1, self.sigma1, self.sigma2, self.s0, self.i0,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("params", "all values must be finite");
        }
        if self.lambda <= 0.0 {
            return bad("lambda", "must be > 0");
        }
        if self.mu <= 0.0 {
            return bad("mu", "must be > 0");
        }
        if self.alpha <= 0.0 {
            return bad("alpha", "must be > 0");
        }
        if self.beta0 < 0.0 {
            return bad("beta0", "must be >= 0");
        }
        if self.sigma1 < 0.0 || self.sigma2 < 0.0 {
            return bad("sigma", "noise intensities must be >= 0");
        }
        if self.s0 <= 0.0 {
            return bad("s0", "must be > 0");
        }
        if self.i0 < 0.0 {
            return bad("i0", "must be >= 0");
        }
        Ok(())
    }

    /// `K = Λ / (μ(α + μ))`, so that `R0(t) = K·β(t)`.
    pub fn k(&self) -> f64 {
        self.lambda / (self.mu * (self.alpha + self.mu))
    }

    pub fn beta_at(&self, t: f64) -> f64 {
        self.beta0 + self.beta1 * t
    }

    pub fn r0_at(&self, t: f64) -> f64 {
        self.k() * self.beta_at(t)
    }
}

/// Free-function form of [`SirParams::r0_at`].
pub fn r0_at(params: &SirParams, t: f64) -> f64 {
    params.r0_at(t)
}

/// Smallest integer `t` in `[1, horizon]` with `R0(t) >= 1`.
pub fn detect_transition(params: &SirParams, horizon: usize) -> Option<usize> {
    if horizon == 0 {
        return None;
    }
    if params.r0_at(1.0) >= 1.0 {
        return Some(1);
    }
    if params.beta1 <= 0.0 {
        // Non-increasing R0 that starts subcritical never crosses.
        return None;
    }
    // Analytic crossing, then settle the integer grid with direct evaluation.
    let crossing = (1.0 / params.k() - params.beta0) / params.beta1;
    let mut t = crossing.ceil().max(1.0);
    if t > horizon as f64 + 1.0 {
        return None;
    }
    while t > 1.0 && params.r0_at(t - 1.0) >= 1.0 {
        t -= 1.0;
    }
    while t <= horizon as f64 && params.r0_at(t) < 1.0 {
        t += 1.0;
    }
    if t <= horizon as f64 {
        Some(t as usize)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: usize,
    pub dt: f64,
    pub seed: u64,
    pub state_floor: f64,
}

impl SimulationConfig {
    /// Default configuration with the floor used for dataset generation.
    /// Multiplicative and demographic noise vanish at `I = 0`, so without a
    /// positive floor subcritical replicates decay to extinction and every
    /// window is flat; those kinds use a floor of 0.1.
    pub fn nominal(kind: NoiseKind) -> Self {
        SimulationConfig {
            state_floor: match kind {
                NoiseKind::White => 0.0,
                NoiseKind::Environmental | NoiseKind::Demographic => 0.1,
            },
            ..SimulationConfig::default()
        }
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon: 1500,
            dt: 0.01,
            seed: 0,
            state_floor: 0.0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<usize, SdeError> {
        let bad = |field, reason: &str| {
            Err(SdeError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if self.horizon < 1 {
            return bad("horizon", "must be >= 1");
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return bad("dt", "must lie in (0, 1]");
        }
        let steps = (1.0 / self.dt).round();
        if ((steps * self.dt) - 1.0).abs() > 1e-9 {
            return bad("dt", "must divide 1 exactly");
        }
        if !self.state_floor.is_finite() || self.state_floor < 0.0 {
            return bad("state_floor", "must be finite and >= 0");
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `I(1), …, I(horizon)`; index 0 holds `I(1)`.
    pub incidence: Vec<f64>,
    pub transition_time: Option<usize>,
    pub params: SirParams,
    pub seed: u64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.incidence.len()
    }

    /// `I(t)` with 1-based `t`.
    pub fn at(&self, t: usize) -> f64 {
        self.incidence[t - 1]
    }

    pub fn regime(&self) -> Regime {
        if self.transition_time.is_some() {
            Regime::Transcritical
        } else {
            Regime::Null
        }
    }
}

/// Diffusion matrix `G` of the demographic-noise model: row 0 multiplies
/// `(dW1, dW2)` in `dS`, row 1 in `dI`. `G·Gᵀ` equals the event covariance
/// `[[a, b], [b, c]]`.
pub fn demographic_diffusion(params: &SirParams, t: f64, s: f64, i: f64) -> [[f64; 2]; 2] {
    let beta = params.beta_at(t);
    let infection = beta * s * i;
    let a = params.lambda + infection + params.mu * s;
    let b = -infection;
    let c = infection + (params.alpha + params.mu) * i;
    let d = (a * c - b * b).max(0.0).sqrt();
    let e = (a + c + 2.0 * d).sqrt();
    [[(a + d) / e, b / e], [b / e, (c + d) / e]]
}

/// Deterministic drift `(dS/dt, dI/dt)`.
pub fn drift(params: &SirParams, t: f64, s: f64, i: f64) -> (f64, f64) {
    let infection = params.beta_at(t) * s * i;
    (
        params.lambda - infection - params.mu * s,
        infection - (params.alpha + params.mu) * i,
    )
}

/// Euler–Maruyama integration of the selected model, recording `I` at
/// `t = 1, …, horizon`. The noise path comes from `config.seed`.
pub fn simulate(params: &SirParams, config: &SimulationConfig) -> Result<Trajectory, SdeError> {
    params.validate()?;
    let steps_per_unit = config.validate()?;
    let mut rng = rng::from_seed(config.seed);
    let dt = 1.0 / steps_per_unit as f64;
    let sqrt_dt = dt.sqrt();
    let floor = config.state_floor;

    let mut s = params.s0;
    let mut i = params.i0;
    let mut incidence = Vec::with_capacity(config.horizon);
    let noisy = match params.noise_kind {
        NoiseKind::White | NoiseKind::Environmental => params.sigma1 > 0.0 || params.sigma2 > 0.0,
        NoiseKind::Demographic => true,
    };

    for unit in 0..config.horizon {
        for step in 0..steps_per_unit {
            let t = unit as f64 + step as f64 * dt;
            let (fs, fi) = drift(params, t, s, i);
            let (mut ds, mut di) = (fs * dt, fi * dt);
            if noisy {
                let dw1: f64 = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
                let dw2: f64 = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
                match params.noise_kind {
                    NoiseKind::White => {
                        ds += params.sigma1 * dw1;
                        di += params.sigma2 * dw2;
                    }
                    NoiseKind::Environmental => {
                        ds += params.sigma1 * s * dw1;
                        di += params.sigma2 * i * dw2;
                    }
                    NoiseKind::Demographic => {
                        let g = demographic_diffusion(params, t, s, i);
                        ds += g[0][0] * dw1 + g[0][1] * dw2;
                        di += g[1][0] * dw1 + g[1][1] * dw2;
                    }
                }
            }
            s = (s + ds).max(floor);
            i = (i + di).max(floor);
            if !s.is_finite() || !i.is_finite() {
                return Err(SdeError::Integration { time: t + dt });
            }
        }
        incidence.push(i);
    }

    Ok(Trajectory {
        incidence,
        transition_time: detect_transition(params, config.horizon),
        params: *params,
        seed: config.seed,
    })
}

/// Triangular distribution on `[min, max]` with peak at `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub min: f64,
    pub mode: f64,
    pub max: f64,
}

impl Triangle {
    pub fn new(min: f64, mode: f64, max: f64) -> Self {
        Triangle { min, mode, max }
    }

    /// Inverse-CDF draw. A degenerate triangle returns its single point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, c, b) = (self.min, self.mode.clamp(self.min, self.max), self.max);
        if b <= a {
            return a;
        }
        let u: f64 = rng.random();
        let split = (c - a) / (b - a);
        if u < split {
            a + (u * (b - a) * (c - a)).sqrt()
        } else {
            b - ((1.0 - u) * (b - a) * (b - c)).sqrt()
        }
    }
}

/// Triangular priors for the β schedule in each regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCalibration {
    pub beta0: Triangle,
    pub beta1_transcritical: Triangle,
    /// Null slopes; `max` is further capped at
    /// `null_slope_fraction · (1/K − β0) / horizon` for each drawn β0.
    pub beta1_null: Triangle,
    pub null_slope_fraction: f64,
    /// Earliest accepted transition time for transcritical draws.
    pub min_transition: usize,
    pub max_attempts: usize,
}

impl Default for ScheduleCalibration {
    fn default() -> Self {
        ScheduleCalibration {
            beta0: Triangle::new(0.02, 0.035, 0.05),
            beta1_transcritical: Triangle::new(2e-5, 6e-5, 1e-4),
            beta1_null: Triangle::new(0.0, 5e-6, f64::INFINITY),
            null_slope_fraction: 0.9,
            min_transition: 401,
            max_attempts: 10_000,
        }
    }
}

/// Draws `(β0, β1)` for `regime`, rejecting draws that violate the regime's
/// contract: transcritical schedules cross inside `[min_transition, horizon]`,
/// null schedules stay below `R0 = 1` through `horizon`.
pub fn sample_beta_schedule<R: Rng + ?Sized>(
    rng: &mut R,
    regime: Regime,
    calib: &ScheduleCalibration,
    base: &SirParams,
    horizon: usize,
) -> Result<(f64, f64), SdeError> {
    let k = base.k();
    for _ in 0..calib.max_attempts {
        let beta0 = calib.beta0.sample(rng);
        let beta1 = match regime {
            Regime::Transcritical => calib.beta1_transcritical.sample(rng),
            Regime::Null => {
                let cap = calib.null_slope_fraction * (1.0 / k - beta0) / horizon as f64;
                let tri = Triangle {
                    max: calib.beta1_null.max.min(cap),
                    ..calib.beta1_null
                };
                if tri.max < tri.min {
                    continue;
                }
                tri.sample(rng)
            }
        };
        let candidate = base.with_schedule(beta0, beta1);
        if candidate.validate().is_err() {
            continue;
        }
        let accepted = match (regime, detect_transition(&candidate, horizon)) {
            (Regime::Transcritical, Some(t)) => t >= calib.min_transition && t <= horizon,
            (Regime::Null, None) => candidate.r0_at(horizon as f64) < 1.0,
            _ => false,
        };
        if accepted {
            return Ok((beta0, beta1));
        }
    }
    Err(SdeError::CalibrationInfeasible {
        regime,
        attempts: calib.max_attempts,
    })
}

/// Everything needed to generate one noise model's replicate set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub base: SirParams,
    pub sim: SimulationConfig,
    pub calib: ScheduleCalibration,
}

impl DatasetSpec {
    pub fn nominal(kind: NoiseKind) -> Self {
        DatasetSpec {
            base: SirParams::nominal(kind),
            sim: SimulationConfig::nominal(kind),
            calib: ScheduleCalibration::default(),
        }
    }
}

/// Generates `n_trans` transcritical replicates followed by `n_null` null
/// replicates. Replicate `i` draws its schedule and noise from streams keyed
/// by `(seed, i)`, so the result does not depend on evaluation order.
pub fn generate_dataset(
    spec: &DatasetSpec,
    n_trans: usize,
    n_null: usize,
    seed: u64,
) -> Result<Vec<Trajectory>, SdeError> {
    if n_trans == 0 || n_null == 0 {
        return Err(SdeError::InvalidConfig {
            field: "counts",
            reason: "replicate counts must be >= 1".into(),
        });
    }
    (0..n_trans + n_null)
        .into_par_iter()
        .map(|index| {
            let regime = if index < n_trans {
                Regime::Transcritical
            } else {
                Regime::Null
            };
            generate_replicate(spec, regime, seed, index as u64).map_err(|e| SdeError::Replicate {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// One replicate of `regime`, keyed by `(seed, index)`.
pub fn generate_replicate(
    spec: &DatasetSpec,
    regime: Regime,
    seed: u64,
    index: u64,
) -> Result<Trajectory, SdeError> {
    let replicate_seed = rng::child_seed(seed, index);
    let mut schedule_rng = rng::stream(replicate_seed, 0);
    let (beta0, beta1) =
        sample_beta_schedule(&mut schedule_rng, regime, &spec.calib, &spec.base, spec.sim.horizon)?;
    let params = spec.base.with_schedule(beta0, beta1);
    let sim = SimulationConfig {
        seed: rng::child_seed(replicate_seed, 1),
        ..spec.sim
    };
    simulate(&params, &sim)
}

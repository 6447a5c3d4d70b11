//! L2-penalised logistic regression fitted by IRLS.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{sigmoid, LearnError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrmParams {
    pub ridge: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LrmParams {
    fn default() -> Self {
        LrmParams {
            ridge: 1e-6,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

impl LrmParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(LearnError::InvalidParam {
                name: "lrm.ridge",
                reason: "must be > 0".into(),
            });
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(LearnError::InvalidParam {
                name: "lrm.tol/max_iter",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrmModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Fixed probability for intercept-only fits on single-class data.
    pub constant: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

impl LrmModel {
    pub fn linear(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        match self.constant {
            Some(p) => p,
            None => sigmoid(self.linear(x)),
        }
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Penalised log-likelihood; `beta[0]` is the unpenalised intercept.
fn objective(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, ridge: f64) -> f64 {
    let z = x * beta;
    let ll: f64 = z.iter().zip(y).map(|(&z, &y)| -(y * softplus(-z) + (1.0 - y) * softplus(z))).sum();
    let pen: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    ll - 0.5 * ridge * pen
}

pub fn fit(rows: &[Vec<f64>], y: &[bool], params: &LrmParams) -> Result<LrmModel, LearnError> {
    let n = rows.len();
    if n == 0 {
        return Err(LearnError::Empty);
    }
    let d = rows[0].len();
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == n {
        let rate = n_pos as f64 / n as f64;
        return Ok(LrmModel {
            weights: vec![0.0; d],
            intercept: 0.0,
            constant: Some(rate),
            iterations: 0,
            converged: true,
            warning: Some("single-class training data: intercept-only model".into()),
        });
    }

    let x = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let yv: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut beta = DVector::<f64>::zeros(d + 1);
    let mut penalty = DMatrix::<f64>::identity(d + 1, d + 1) * params.ridge;
    penalty[(0, 0)] = 0.0;
    let mut obj = objective(&x, &yv, &beta, params.ridge);
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..params.max_iter {
        iterations = it + 1;
        let z = &x * &beta;
        let p: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        let w: Vec<f64> = p.iter().map(|&v| (v * (1.0 - v)).max(1e-12)).collect();
        let resid = DVector::from_iterator(n, p.iter().zip(&yv).map(|(p, y)| y - p));
        let grad = x.transpose() * resid - &penalty * &beta;
        let mut xw = x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let mut h = x.transpose() * xw + &penalty;
        // Keep the intercept direction well posed when weights vanish.
        h[(0, 0)] += 1e-12;
        let step = match h.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => h.lu().solve(&grad).ok_or(LearnError::NonFinite("IRLS Hessian"))?,
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand = &beta + &step * t;
            let c_obj = objective(&x, &yv, &cand, params.ridge);
            if c_obj.is_finite() && c_obj >= obj - 1e-12 * obj.abs() {
                accepted = Some((cand, c_obj, t));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, c_obj, t)) = accepted else {
            converged = true;
            break;
        };
        let change = step.iter().map(|v| (v * t).abs()).fold(0.0, f64::max);
        beta = cand;
        obj = c_obj;
        if change < params.tol {
            converged = true;
            break;
        }
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite("LRM coefficients"));
    }
    Ok(LrmModel {
        weights: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
        constant: None,
        iterations,
        converged,
        warning: None,
    })
}

//! Soft-margin C-SVM with an RBF kernel, solved by sequential minimal
//! optimisation with second-order working-set selection.

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// RBF width; `None` means `1 / d`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(LearnError::InvalidParam {
                name: "svm.c",
                reason: "must be > 0".into(),
            });
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(LearnError::InvalidParam {
                    name: "svm.gamma",
                    reason: "must be > 0".into(),
                });
            }
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(LearnError::InvalidParam {
                name: "svm.tol/max_iter",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_i · α_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// Maximal KKT violation `m(α) − M(α)` at exit.
    pub kkt_violation: f64,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-gamma * d).exp()
}

impl SvmModel {
    /// Signed decision value `Σ y_i α_i K(x_i, x) − ρ`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * rbf(sv, x, self.gamma))
            .sum::<f64>()
            - self.rho
    }
}

/// Extra output of a fit, used by tests and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmTrace {
    /// Dual objective `eᵀα − ½αᵀQα` after every SMO step.
    pub dual_objective: Vec<f64>,
    pub alpha: Vec<f64>,
}

const TAU: f64 = 1e-12;
const FULL_KERNEL_MAX: usize = 6000;

enum Kernel<'a> {
    Full { k: Vec<f64>, n: usize },
    Lazy { x: &'a [Vec<f64>], gamma: f64 },
}

impl Kernel<'_> {
    fn row(&self, i: usize, out: &mut Vec<f64>) {
        match self {
            Kernel::Full { k, n } => {
                out.clear();
                out.extend_from_slice(&k[i * n..(i + 1) * n]);
            }
            Kernel::Lazy { x, gamma } => {
                out.clear();
                out.extend(x.iter().map(|r| rbf(&x[i], r, *gamma)));
            }
        }
    }
}

pub fn fit(x: &[Vec<f64>], y: &[bool], params: &SvmParams) -> Result<(SvmModel, SvmTrace), LearnError> {
    let n = x.len();
    if n == 0 {
        return Err(LearnError::Empty);
    }
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == n {
        return Err(LearnError::SingleClass);
    }
    let d = x[0].len();
    if d == 0 {
        return Err(LearnError::NoFeatures);
    }
    let gamma = params.gamma.unwrap_or(1.0 / d as f64);
    let c = params.c;
    let ys: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();

    let kernel = if n <= FULL_KERNEL_MAX {
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            k[i * n + i] = 1.0;
            for j in 0..i {
                let v = rbf(&x[i], &x[j], gamma);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        Kernel::Full { k, n }
    } else {
        Kernel::Lazy { x, gamma }
    };
    // RBF diagonal is 1.
    let kd = 1.0;

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut ki = Vec::with_capacity(n);
    let mut kj = Vec::with_capacity(n);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut violation;

    let up = |t: usize, a: &[f64]| (ys[t] > 0.0 && a[t] < c) || (ys[t] < 0.0 && a[t] > 0.0);
    let low = |t: usize, a: &[f64]| (ys[t] > 0.0 && a[t] > 0.0) || (ys[t] < 0.0 && a[t] < c);

    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(t, &alpha) {
                let v = -ys[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if low(t, &alpha) {
                gmin = gmin.min(-ys[t] * grad[t]);
            }
        }
        violation = gmax - gmin;
        if i == usize::MAX || violation < params.tol || iterations >= params.max_iter {
            break;
        }
        kernel.row(i, &mut ki);
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(t, &alpha) {
                continue;
            }
            let b = gmax + ys[t] * grad[t];
            if b > 0.0 {
                let mut a = kd + kd - 2.0 * ki[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break;
        }
        kernel.row(j, &mut kj);
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = ki[j];
        if ys[i] != ys[j] {
            let mut quad = kd + kd - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kd + kd - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += ys[t] * (ys[i] * ki[t] * di + ys[j] * kj[t] * dj);
        }
        let obj: f64 = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
        trace.push(obj);
    }

    // Offset from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if alpha[t] >= c {
            if ys[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if ys[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            dual_coef.push(ys[t] * alpha[t]);
        }
    }
    let model = SvmModel {
        gamma,
        c,
        support_vectors,
        dual_coef,
        rho,
        iterations,
        kkt_violation: violation.max(0.0),
    };
    Ok((
        model,
        SvmTrace {
            dual_objective: trace,
            alpha,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let pos = i < 10;
            let c = if pos { 2.0 } else { -2.0 };
            let a = (i as f64 * 1.3).sin() * 0.5;
            let b = (i as f64 * 0.7).cos() * 0.5;
            x.push(vec![c + a, c + b]);
            y.push(pos);
        }
        (x, y)
    }

    #[test]
    fn separated_blobs_fit_exactly() {
        let (x, y) = blobs();
        let (m, tr) = fit(&x, &y, &SvmParams::default()).unwrap();
        for (r, &t) in x.iter().zip(&y) {
            assert_eq!(m.decision(r) > 0.0, t);
        }
        assert!(m.kkt_violation < 1e-3);
        assert!(tr.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
        let eq: f64 = tr.alpha.iter().zip(&y).map(|(a, &t)| if t { *a } else { -a }).sum();
        assert!(eq.abs() < 1e-12);
    }

    #[test]
    fn dual_objective_never_decreases() {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 1.1).cos(), (i as f64 * 0.05).sin()])
            .collect();
        let y: Vec<bool> = (0..60).map(|i| (i * 7 + i / 3) % 3 == 0).collect();
        let (m, tr) = fit(&x, &y, &SvmParams::default()).unwrap();
        assert!(tr.dual_objective.len() > 5);
        for w in tr.dual_objective.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
        }
        assert!(m.kkt_violation < 1e-3);
    }

    #[test]
    fn conflicting_duplicates_give_zero_decision() {
        let p = vec![0.3, -1.2];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..4 {
            x.push(p.clone());
            y.push(true);
            x.push(p.clone());
            y.push(false);
        }
        let (m, _) = fit(&x, &y, &SvmParams::default()).unwrap();
        assert!(m.decision(&p).abs() < 0.1);
    }

    #[test]
    fn single_class_errors() {
        assert_eq!(
            fit(&[vec![1.0], vec![2.0]], &[true, true], &SvmParams::default()).unwrap_err(),
            LearnError::SingleClass
        );
    }

    #[test]
    fn default_gamma_is_inverse_dimension() {
        let (x, y) = blobs();
        let (m, _) = fit(&x, &y, &SvmParams::default()).unwrap();
        assert_eq!(m.gamma, 0.5);
    }
}

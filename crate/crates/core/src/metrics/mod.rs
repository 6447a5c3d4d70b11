//! ROC AUC with DeLong variance, Mann-Whitney U, Wald intervals and
//! evaluation reports.

mod report;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub use report::{evaluate, EvalReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("AUC undefined: labels contain a single class")]
    SingleClass,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    Empty,
    #[error("invalid argument: {0}")]
    Invalid(String),
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Two-sided critical value `z_{(1+level)/2}`.
pub fn z_critical(level: f64) -> f64 {
    if level <= 0.0 {
        return 0.0;
    }
    std_normal().inverse_cdf(0.5 + level / 2.0)
}

/// Two-sided normal p-value for a z statistic.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    (2.0 * std_normal().sf(z.abs())).min(1.0)
}

/// 1-based ranks with ties sharing their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn split_by_label(scores: &[f64], labels: &[bool]) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), labels.len()));
    }
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(MetricsError::SingleClass);
    }
    Ok((pos, neg))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half, via the rank-sum identity.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    let (pos, neg) = split_by_label(scores, labels)?;
    let ranks = midranks(scores);
    let m = pos.len() as f64;
    let n = neg.len() as f64;
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    Ok((rank_sum - m * (m + 1.0) / 2.0) / (m * n))
}

/// DeLong structural components of one score vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Structural {
    pub auc: f64,
    /// `V10_i`: share of negatives beaten by positive `i`.
    pub v10: Vec<f64>,
    /// `V01_j`: share of positives beating negative `j`.
    pub v01: Vec<f64>,
}

pub fn structural_components(scores: &[f64], labels: &[bool]) -> Result<Structural, MetricsError> {
    let (pos, neg) = split_by_label(scores, labels)?;
    let (m, n) = (pos.len() as f64, neg.len() as f64);
    let all = midranks(scores);
    let rp = midranks(&pos);
    let rn = midranks(&neg);
    let (mut ip, mut in_) = (0, 0);
    let mut v10 = Vec::with_capacity(pos.len());
    let mut v01 = Vec::with_capacity(neg.len());
    for (k, &l) in labels.iter().enumerate() {
        if l {
            v10.push((all[k] - rp[ip]) / n);
            ip += 1;
        } else {
            v01.push(1.0 - (all[k] - rn[in_]) / m);
            in_ += 1;
        }
    }
    let auc = v10.iter().sum::<f64>() / m;
    Ok(Structural { auc, v10, v01 })
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len();
    if k < 2 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / k as f64;
    let mb = b.iter().sum::<f64>() / k as f64;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (k as f64 - 1.0)
}

impl Structural {
    pub fn variance(&self) -> f64 {
        covariance(&self.v10, &self.v10) / self.v10.len() as f64
            + covariance(&self.v01, &self.v01) / self.v01.len() as f64
    }
}

/// DeLong variance of the empirical AUC.
pub fn auc_variance(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    Ok(structural_components(scores, labels)?.variance())
}

/// Half-width of the normal-theory interval `AUC ± z·√var` at `level`.
pub fn auc_ci(scores: &[f64], labels: &[bool], level: f64) -> Result<f64, MetricsError> {
    if !(0.0..1.0).contains(&level) {
        return Err(MetricsError::Invalid(format!("level {level} outside [0, 1)")));
    }
    let var = auc_variance(scores, labels)?;
    Ok(z_critical(level) * var.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeLongResult {
    pub auc_a: f64,
    pub auc_b: f64,
    pub z: f64,
    pub p_value: f64,
}

fn delong_from(auc_a: f64, auc_b: f64, var: f64) -> DeLongResult {
    let diff = auc_a - auc_b;
    // Two perfect classifiers are indistinguishable by convention.
    if auc_a == 1.0 && auc_b == 1.0 {
        return DeLongResult {
            auc_a,
            auc_b,
            z: 0.0,
            p_value: 1.0,
        };
    }
    let z = if var > 0.0 {
        diff / var.sqrt()
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    DeLongResult {
        auc_a,
        auc_b,
        z,
        p_value: two_sided_p(z),
    }
}

/// Paired DeLong test for two classifiers scored on the same labelled set.
pub fn delong_test(scores_a: &[f64], scores_b: &[f64], labels: &[bool]) -> Result<DeLongResult, MetricsError> {
    if scores_a.len() != scores_b.len() {
        return Err(MetricsError::LengthMismatch(scores_a.len(), scores_b.len()));
    }
    let a = structural_components(scores_a, labels)?;
    let b = structural_components(scores_b, labels)?;
    let (m, n) = (a.v10.len() as f64, a.v01.len() as f64);
    let s10 = covariance(&a.v10, &a.v10) + covariance(&b.v10, &b.v10) - 2.0 * covariance(&a.v10, &b.v10);
    let s01 = covariance(&a.v01, &a.v01) + covariance(&b.v01, &b.v01) - 2.0 * covariance(&a.v01, &b.v01);
    Ok(delong_from(a.auc, b.auc, s10 / m + s01 / n))
}

/// DeLong comparison of two AUCs estimated on independent test sets.
pub fn delong_test_unpaired(
    scores_a: &[f64],
    labels_a: &[bool],
    scores_b: &[f64],
    labels_b: &[bool],
) -> Result<DeLongResult, MetricsError> {
    let a = structural_components(scores_a, labels_a)?;
    let b = structural_components(scores_b, labels_b)?;
    Ok(delong_from(a.auc, b.auc, a.variance() + b.variance()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    TwoSided,
    /// `x` tends to be smaller than `y`.
    Less,
    /// `x` tends to be larger than `y`.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwuResult {
    /// `U` for `x`: pairs with `x > y`, ties counting one half.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Largest combined sample size for which the exact null distribution is
/// used (tie-free data only).
pub const MWU_EXACT_MAX: usize = 20;

/// Counts of arrangements giving each `U` for sample sizes `(m, n)`.
fn mwu_exact_counts(m: usize, n: usize) -> Vec<f64> {
    // table[j][u] for the current i: arrangements of i x's and j y's.
    let max_u = m * n;
    let mut prev: Vec<Vec<f64>> = (0..=n)
        .map(|_| {
            let mut v = vec![0.0; max_u + 1];
            v[0] = 1.0;
            v
        })
        .collect();
    for i in 1..=m {
        let mut cur: Vec<Vec<f64>> = vec![vec![0.0; max_u + 1]; n + 1];
        cur[0][0] = 1.0;
        for j in 1..=n {
            for u in 0..=i * j {
                // Largest element is an x (beats all j y's) or a y.
                let from_x = if u >= j { prev[j][u - j] } else { 0.0 };
                cur[j][u] = from_x + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev.swap_remove(n)
}

/// Mann-Whitney U test with midranks. Tie-free samples with
/// `|x| + |y| <= MWU_EXACT_MAX` use the exact null distribution; otherwise
/// the normal approximation with tie-corrected variance and continuity
/// correction.
pub fn mann_whitney_u(x: &[f64], y: &[f64], alternative: Alternative) -> Result<MwuResult, MetricsError> {
    if x.is_empty() || y.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (m, n) = (x.len(), y.len());
    let joined: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&joined);
    let rx: f64 = ranks[..m].iter().sum();
    let (mf, nf) = (m as f64, n as f64);
    let u = rx - mf * (mf + 1.0) / 2.0;
    let mu = mf * nf / 2.0;

    let mut sorted = joined.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }

    if tie_term == 0.0 && m + n <= MWU_EXACT_MAX {
        let counts = mwu_exact_counts(m, n);
        let total: f64 = counts.iter().sum();
        let k = u.round() as usize;
        let cdf: f64 = counts[..=k].iter().sum::<f64>() / total;
        let sf: f64 = counts[k..].iter().sum::<f64>() / total;
        let p = match alternative {
            Alternative::TwoSided => (2.0 * cdf.min(sf)).min(1.0),
            Alternative::Less => cdf,
            Alternative::Greater => sf,
        };
        return Ok(MwuResult {
            u,
            p_value: p,
            exact: true,
        });
    }

    let big_n = mf + nf;
    let var = mf * nf / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return Ok(MwuResult {
            u,
            p_value: 1.0,
            exact: false,
        });
    }
    let sd = var.sqrt();
    let normal = std_normal();
    let p = match alternative {
        Alternative::TwoSided => {
            let z = ((u - mu).abs() - 0.5).max(0.0) / sd;
            (2.0 * normal.sf(z)).min(1.0)
        }
        Alternative::Greater => normal.sf((u - mu - 0.5) / sd),
        Alternative::Less => normal.cdf((u - mu + 0.5) / sd),
    };
    Ok(MwuResult {
        u,
        p_value: p,
        exact: false,
    })
}

/// Wald half-width `z·√(p̂(1 − p̂)/n)`.
pub fn accuracy_ci(p_hat: f64, n: usize, level: f64) -> Result<f64, MetricsError> {
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(MetricsError::Invalid(format!("p_hat {p_hat} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(MetricsError::Invalid(format!("level {level} outside [0, 1)")));
    }
    Ok(z_critical(level) * (p_hat * (1.0 - p_hat) / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / pairs
    }

    #[test]
    fn auc_examples() {
        let labels = [true, true, false, false];
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.5; 4], &labels).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.5; 2], &[true, true]), Err(MetricsError::SingleClass));
    }

    #[test]
    fn auc_matches_pair_enumeration() {
        let mut s = 99u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            s >> 33
        };
        let scores: Vec<f64> = (0..50).map(|_| (next() % 10) as f64).collect();
        let labels: Vec<bool> = (0..50).map(|_| next() % 2 == 0).collect();
        let a = roc_auc(&scores, &labels).unwrap();
        assert!((a - brute_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn structural_components_by_hand() {
        // Positives 0.8, 0.4; negatives 0.6, 0.2.
        // ψ(0.8,·) = (1, 1) → V10 = 1;  ψ(0.4,·) = (0, 1) → V10 = 0.5.
        // V01(0.6) = (1 + 0)/2 = 0.5;  V01(0.2) = (1 + 1)/2 = 1.
        let scores = [0.8, 0.6, 0.4, 0.2];
        let labels = [true, false, true, false];
        let st = structural_components(&scores, &labels).unwrap();
        assert_eq!(st.v10, vec![1.0, 0.5]);
        assert_eq!(st.v01, vec![0.5, 1.0]);
        assert_eq!(st.auc, 0.75);
        // S10 = var(1, 0.5) = 0.125, S01 = var(0.5, 1) = 0.125.
        let var = st.variance();
        assert!((var - (0.125 / 2.0 + 0.125 / 2.0)).abs() < 1e-15);
        let hw = auc_ci(&scores, &labels, 0.95).unwrap();
        assert!((hw - 1.959963984540054 * var.sqrt()).abs() < 1e-12);
        assert_eq!(auc_ci(&scores, &labels, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn perfect_auc_has_zero_width() {
        let scores = [0.9, 0.8, 0.7, 0.1, 0.2];
        let labels = [true, true, true, false, false];
        assert_eq!(auc_ci(&scores, &labels, 0.95).unwrap(), 0.0);
    }

    #[test]
    fn delong_conventions() {
        let labels = [true, true, true, false, false, false];
        let a = [0.9, 0.7, 0.4, 0.5, 0.3, 0.1];
        let r = delong_test(&a, &a, &labels).unwrap();
        assert_eq!((r.z, r.p_value), (0.0, 1.0));
        let perfect_a = [0.9, 0.8, 0.7, 0.3, 0.2, 0.1];
        let perfect_b = [5.0, 6.0, 7.0, 1.0, 2.0, 3.0];
        assert_eq!(delong_test(&perfect_a, &perfect_b, &labels).unwrap().p_value, 1.0);
        assert_eq!(
            delong_test_unpaired(&perfect_a, &labels, &perfect_b, &labels).unwrap().p_value,
            1.0
        );
        assert!(delong_test(&a, &a[..5], &labels).is_err());
    }

    #[test]
    fn delong_is_symmetric() {
        let labels = [true, false, true, true, false, false, true, false];
        let a = [0.9, 0.2, 0.6, 0.4, 0.5, 0.1, 0.8, 0.3];
        let b = [0.3, 0.4, 0.9, 0.2, 0.1, 0.7, 0.6, 0.5];
        let ab = delong_test(&a, &b, &labels).unwrap();
        let ba = delong_test(&b, &a, &labels).unwrap();
        assert!((ab.z + ba.z).abs() < 1e-12);
        assert!((ab.p_value - ba.p_value).abs() < 1e-12);
    }

    #[test]
    fn mwu_examples() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = mann_whitney_u(&x, &x, Alternative::TwoSided).unwrap();
        assert_eq!(r.u, 8.0);
        assert!(r.p_value > 0.99);
        assert_eq!(mann_whitney_u(&[], &x, Alternative::TwoSided), Err(MetricsError::Empty));
    }

    #[test]
    fn mwu_exact_counts_sum_to_binomial() {
        let c = mwu_exact_counts(4, 6);
        assert_eq!(c.iter().sum::<f64>(), 210.0);
        assert_eq!(c.len(), 25);
        // Symmetric about mn/2.
        for u in 0..=24 {
            assert_eq!(c[u], c[24 - u]);
        }
    }

    #[test]
    fn mwu_normal_approximation_matches_reference() {
        // 30 vs 30 tie-free shifted samples; cross-checked against the
        // closed form with continuity correction.
        let x: Vec<f64> = (0..30).map(|i| i as f64 + 0.5).collect();
        let y: Vec<f64> = (0..30).map(|i| i as f64 + 10.25).collect();
        let r = mann_whitney_u(&x, &y, Alternative::TwoSided).unwrap();
        assert!(!r.exact);
        let mu = 450.0;
        let sd = (900.0 * 61.0 / 12.0f64).sqrt();
        let z = ((r.u - mu).abs() - 0.5) / sd;
        let p = 2.0 * std_normal().sf(z);
        assert!((r.p_value - p).abs() < 1e-15);
        let g = mann_whitney_u(&x, &y, Alternative::Greater).unwrap();
        let l = mann_whitney_u(&x, &y, Alternative::Less).unwrap();
        assert!(l.p_value < 0.01 && g.p_value > 0.99);
    }

    #[test]
    fn wald_examples() {
        let hw = accuracy_ci(0.9474, 19, 0.95).unwrap();
        assert_eq!(format!("{hw:.4}"), "0.1004");
        assert_eq!(accuracy_ci(1.0, 19, 0.95).unwrap(), 0.0);
        let hw = accuracy_ci(0.5, 100, 0.95).unwrap();
        assert!((hw - 0.098).abs() < 1e-4);
        assert!(accuracy_ci(0.5, 0, 0.95).is_err());
    }

    #[test]
    fn wald_reproduces_printed_singapore_intervals() {
        // (correct out of 19, printed half-width)
        let printed = [
            (17, "0.1380"),
            (11, "0.2220"),
            (1, "0.1004"),
            (18, "0.1004"),
            (4, "0.1833"),
            (2, "0.1380"),
            (6, "0.2090"),
            (19, "0.0000"),
            (0, "0.0000"),
        ];
        for (k, want) in printed {
            let hw = accuracy_ci(k as f64 / 19.0, 19, 0.95).unwrap();
            assert_eq!(format!("{hw:.4}"), want, "{k}/19");
        }
    }
}

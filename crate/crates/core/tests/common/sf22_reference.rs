//! Brute-force references for the 22 statistical features, written from the
//! feature definitions with direct sums instead of FFTs, SVDs or shared
//! helpers.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[allow(clippy::approx_constant)]
const C22_PI: f64 = 3.14159265359;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn zscore(x: &[f64]) -> Vec<f64> {
    let (m, s) = (mean(x), sd(x));
    x.iter().map(|v| (v - m) / s).collect()
}

/// `r[k] = Σ (y_t − ȳ)(y_{t+k} − ȳ) / Σ (y_t − ȳ)²`, O(n²).
fn acf(y: &[f64]) -> Vec<f64> {
    let m = mean(y);
    let d: Vec<f64> = y.iter().map(|v| v - m).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    (0..y.len())
        .map(|k| (0..y.len() - k).map(|t| d[t] * d[t + k]).sum::<f64>() / c0)
        .collect()
}

fn first_nonpositive(r: &[f64], cap: usize) -> usize {
    (0..cap.min(r.len())).find(|&k| r[k] <= 0.0).unwrap_or(cap.min(r.len()))
}

fn bin_of(v: f64, lo: f64, width: f64, nb: usize) -> usize {
    // Largest i with lo + i·width <= v, clipped into the last bin.
    let mut i = 0;
    while i + 1 < nb && lo + (i + 1) as f64 * width <= v {
        i += 1;
    }
    i
}

fn hist_mode(y: &[f64], nb: usize) -> f64 {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = (hi - lo) / nb as f64;
    let mut c = vec![0; nb];
    for &v in y {
        c[bin_of(v, lo, w, nb)] += 1;
    }
    let top = *c.iter().max().unwrap();
    let centres: Vec<f64> = (0..nb).filter(|&i| c[i] == top).map(|i| lo + (i as f64 + 0.5) * w).collect();
    mean(&centres)
}

fn f1ecac(r: &[f64]) -> f64 {
    let th = (-1.0f64).exp();
    for k in 1..r.len() - 1 {
        if r[k] < th {
            return (k - 1) as f64 + (th - r[k - 1]) / (r[k] - r[k - 1]);
        }
    }
    r.len() as f64
}

fn first_min(r: &[f64]) -> f64 {
    (1..r.len() - 1)
        .find(|&k| r[k] < r[k - 1] && r[k] < r[k + 1])
        .map(|k| k as f64)
        .unwrap_or(r.len() as f64)
}

fn ami_even_2_5(y: &[f64]) -> f64 {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min) - 0.1;
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.1;
    let w = (hi - lo) / 5.0;
    let b = |v: f64| ((v - lo) / w).floor().clamp(0.0, 4.0) as usize;
    let mut joint = [[0.0; 5]; 5];
    let pairs = y.len() - 2;
    for t in 0..pairs {
        joint[b(y[t])][b(y[t + 2])] += 1.0 / pairs as f64;
    }
    let mut mi = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let pi: f64 = joint[i].iter().sum();
            let pj: f64 = (0..5).map(|k| joint[k][j]).sum();
            if joint[i][j] > 0.0 {
                mi += joint[i][j] * (joint[i][j] / (pi * pj)).ln();
            }
        }
    }
    mi
}

fn longest(flags: &[bool]) -> f64 {
    let mut best = 0;
    for s in 0..flags.len() {
        let mut e = s;
        while e < flags.len() && flags[e] {
            e += 1;
        }
        best = best.max(e - s);
    }
    best as f64
}

/// Quantile with linear interpolation between order statistics at
/// positions `(i + 0.5) / n`, clamped at the ends.
fn quantile(y: &[f64], q: f64) -> f64 {
    let mut s = y.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let pos = q * n - 0.5;
    if pos <= 0.0 {
        return s[0];
    }
    if pos >= n - 1.0 {
        return s[s.len() - 1];
    }
    let i = pos.floor() as usize;
    s[i] + (pos - i as f64) * (s[i + 1] - s[i])
}

fn symbols3(y: &[f64]) -> Vec<usize> {
    let q1 = quantile(y, 1.0 / 3.0);
    let q2 = quantile(y, 2.0 / 3.0);
    y.iter().map(|&v| if v <= q1 { 0 } else if v <= q2 { 1 } else { 2 }).collect()
}

fn transition_sumdiagcov(y: &[f64], r: &[f64]) -> f64 {
    let tau = first_nonpositive(r, y.len()).max(1);
    let down: Vec<f64> = y.iter().step_by(tau).copied().collect();
    let s = symbols3(&down);
    let mut t = [[0.0; 3]; 3];
    for w in s.windows(2) {
        t[w[0]][w[1]] += 1.0 / (down.len() - 1) as f64;
    }
    (0..3)
        .map(|j| {
            let col = [t[0][j], t[1][j], t[2][j]];
            let m = mean(&col);
            col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 2.0
        })
        .sum()
}

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        x[r] = (b[r] - (r + 1..n).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
    }
    x
}

/// Cubic spline with a single interior break at `floor(n/2) − 1`, fitted by
/// least squares on a B-spline basis.
fn spline_fit(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let (a, k, b) = (0.0, (n / 2) as f64 - 1.0, (n - 1) as f64);
    // Knot vector with 4-fold ends.
    let t = [a, a, a, a, k, b, b, b, b];
    fn bspline(t: &[f64], i: usize, d: usize, x: f64, last: bool) -> f64 {
        if d == 0 {
            let inside = (t[i] <= x && x < t[i + 1]) || (last && x == t[i + 1] && t[i] < t[i + 1]);
            return if inside { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        if t[i + d] > t[i] {
            v += (x - t[i]) / (t[i + d] - t[i]) * bspline(t, i, d - 1, x, last);
        }
        if t[i + d + 1] > t[i + 1] {
            v += (t[i + d + 1] - x) / (t[i + d + 1] - t[i + 1]) * bspline(t, i + 1, d - 1, x, last);
        }
        v
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let x = i as f64;
            (0..5).map(|j| bspline(&t, j, 3, x, i == n - 1 && j + 4 == 8)).collect()
        })
        .collect();
    let mut ata = vec![vec![0.0; 5]; 5];
    let mut aty = vec![0.0; 5];
    for (row, &v) in rows.iter().zip(y) {
        for p in 0..5 {
            aty[p] += row[p] * v;
            for q in 0..5 {
                ata[p][q] += row[p] * row[q];
            }
        }
    }
    let c = solve(ata, aty);
    rows.iter().map(|r| r.iter().zip(&c).map(|(a, b)| a * b).sum()).collect()
}

fn periodicity(y: &[f64]) -> f64 {
    let n = y.len();
    let fit = spline_fit(y);
    let e: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let lags = n.div_ceil(3);
    let c: Vec<f64> = (1..=lags)
        .map(|tau| (0..n - tau).map(|i| e[i] * e[i + tau]).sum::<f64>() / (n - tau) as f64)
        .collect();
    let is_trough = |i: usize| c[i] - c[i - 1] < 0.0 && c[i + 1] - c[i] > 0.0;
    let is_peak = |i: usize| c[i] - c[i - 1] > 0.0 && c[i + 1] - c[i] < 0.0;
    for p in 1..lags - 1 {
        if !is_peak(p) {
            continue;
        }
        let Some(tr) = (1..p).rev().find(|&i| is_trough(i)) else {
            continue;
        };
        if c[p] - c[tr] >= 0.01 && c[p] >= 0.0 {
            return p as f64;
        }
    }
    0.0
}

fn embed2(y: &[f64], r: &[f64]) -> f64 {
    let n = y.len();
    let mut tau = first_nonpositive(r, n);
    if tau as f64 > n as f64 / 10.0 {
        tau = n / 10;
    }
    let d: Vec<f64> = (0..n - tau - 1)
        .map(|i| ((y[i + 1] - y[i]).powi(2) + (y[i + tau] - y[i + tau + 1]).powi(2)).sqrt())
        .collect();
    let l = mean(&d);
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nb = ((hi - lo) / (3.5 * sd(&d) / (d.len() as f64).cbrt())).ceil() as usize;
    let w = (hi - lo) / nb as f64;
    let mut c = vec![0.0; nb];
    for &v in &d {
        c[bin_of(v, lo, w, nb)] += 1.0;
    }
    let diffs: Vec<f64> = (0..nb)
        .map(|i| {
            let centre = lo + (i as f64 + 0.5) * w;
            (c[i] / d.len() as f64 - (-centre / l).exp() / l).abs()
        })
        .collect();
    mean(&diffs)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn gaussian_fmmi(y: &[f64]) -> f64 {
    let n = y.len();
    let tau = 40.min(n.div_ceil(2));
    let ami: Vec<f64> = (1..=tau)
        .map(|lag| {
            let rho = pearson(&y[..n - lag], &y[lag..]);
            -0.5 * (1.0 - rho * rho).ln()
        })
        .collect();
    (1..tau - 1)
        .find(|&i| ami[i] < ami[i - 1] && ami[i] < ami[i + 1])
        .map(|i| i as f64)
        .unwrap_or(tau as f64)
}

fn tauresrat(y: &[f64], r: &[f64]) -> f64 {
    let res: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    first_nonpositive(&acf(&res), res.len()) as f64 / first_nonpositive(r, y.len()) as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn outlier_mdrmd(y: &[f64], sign: f64) -> f64 {
    let n = y.len();
    let x: Vec<f64> = y.iter().map(|v| sign * v).collect();
    let nonneg = x.iter().filter(|&&v| v >= 0.0).count() as f64;
    let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let steps = (top / 0.01 + 1.0) as usize;
    let mut pct = Vec::new();
    let mut gap_defined = Vec::new();
    let mut pos = Vec::new();
    for j in 0..steps {
        let th = j as f64 * 0.01;
        let idx: Vec<f64> = (0..n).filter(|&i| x[i] >= th).map(|i| (i + 1) as f64).collect();
        pct.push((idx.len() as f64 - 1.0) * 100.0 / nonneg);
        gap_defined.push(idx.len() >= 2);
        pos.push(if idx.is_empty() { f64::NAN } else { median(&idx) / (n as f64 / 2.0) - 1.0 });
    }
    // Last threshold with more than 2% of events, and the first threshold
    // from which gaps are undefined.
    let last_busy = (0..steps).rev().find(|&j| pct[j] > 2.0).unwrap_or(0);
    let first_sparse = (0..steps).find(|&j| !gap_defined[j]).unwrap_or(steps - 1);
    median(&pos[..=last_busy.min(first_sparse)])
}

/// Naive DFT power of the mean-removed series on `nfft` bins.
fn power(y: &[f64], nfft: usize) -> Vec<f64> {
    let m = mean(y);
    (0..nfft)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in y.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * t % nfft) as f64 / nfft as f64;
                re += (v - m) * ang.cos();
                im += (v - m) * ang.sin();
            }
            re * re + im * im
        })
        .collect()
}

/// One-sided spectral density per unit angular frequency.
fn one_sided(y: &[f64]) -> (Vec<f64>, usize) {
    let nfft = y.len().next_power_of_two();
    let p = power(y, nfft);
    let half = nfft / 2 + 1;
    let s = (0..half)
        .map(|i| {
            let twice = if i == 0 || i == half - 1 { 1.0 } else { 2.0 };
            twice * p[i] / y.len() as f64
        })
        .collect();
    (s, nfft)
}

fn welch_area(y: &[f64]) -> f64 {
    // Density S/(2π) integrated with spacing 2π/nfft over the lowest fifth.
    let (s, nfft) = one_sided(y);
    s[..s.len() / 5].iter().sum::<f64>() / nfft as f64
}

fn welch_centroid(y: &[f64]) -> f64 {
    let (s, nfft) = one_sided(y);
    let total: f64 = s.iter().sum();
    let mut acc = 0.0;
    for (i, v) in s.iter().enumerate() {
        acc += v;
        if acc > total / 2.0 {
            return 2.0 * C22_PI * i as f64 / nfft as f64;
        }
    }
    0.0
}

fn motif_hh(y: &[f64]) -> f64 {
    let s = symbols3(y);
    let mut h = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let p = s.windows(2).filter(|w| w[0] == a && w[1] == b).count() as f64 / (y.len() - 1) as f64;
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
    }
    h
}

/// Centred-form OLS residuals of `v` on `1..=len`.
fn detrend(v: &[f64]) -> Vec<f64> {
    let x: Vec<f64> = (1..=v.len()).map(|i| i as f64).collect();
    let (mx, mv) = (mean(&x), mean(v));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxv: f64 = x.iter().zip(v).map(|(a, b)| (a - mx) * (b - mv)).sum();
    let slope = sxv / sxx;
    x.iter().zip(v).map(|(a, b)| b - (mv + slope * (a - mx))).collect()
}

fn line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let m = sxy / sxx;
    (m, my - m * mx)
}

fn fluct_prop_r1(y: &[f64], lag: usize, dfa: bool) -> f64 {
    let n = y.len();
    let (lo, hi) = (5f64.ln(), ((n / 2) as f64).ln());
    let mut scales: Vec<usize> = (0..50).map(|i| (lo + i as f64 * (hi - lo) / 49.0).exp().round() as usize).collect();
    scales.dedup();
    let k = scales.len();
    let sub: Vec<f64> = y.iter().step_by(lag).take(n / lag).copied().collect();
    let profile: Vec<f64> = sub
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    let f: Vec<f64> = scales
        .iter()
        .map(|&tau| {
            let segs = profile.len() / tau;
            let mut total = 0.0;
            for j in 0..segs {
                let r = detrend(&profile[j * tau..(j + 1) * tau]);
                if dfa {
                    total += r.iter().map(|v| v * v).sum::<f64>();
                } else {
                    let mx = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mn = r.iter().copied().fold(f64::INFINITY, f64::min);
                    total += (mx - mn).powi(2);
                }
            }
            if dfa {
                (total / (segs * tau) as f64).sqrt()
            } else {
                (total / segs as f64).sqrt()
            }
        })
        .collect();
    let lx: Vec<f64> = scales.iter().map(|&s| (s as f64).ln()).collect();
    let ly: Vec<f64> = f.iter().map(|v| v.ln()).collect();
    let rmse = |a: usize, b: usize| {
        let (m, c) = line(&lx[a..b], &ly[a..b]);
        (a..b).map(|j| (m * lx[j] + c - ly[j]).powi(2)).sum::<f64>().sqrt()
    };
    // Split point i: the first segment is [0, i), the second [i − 1, k).
    let mut best = (f64::INFINITY, 0);
    for i in 6..=k - 6 {
        let e = rmse(0, i) + rmse(i - 1, k);
        if e < best.0 {
            best = (e, i);
        }
    }
    best.1 as f64 / k as f64
}

fn mean3_stderr(y: &[f64]) -> f64 {
    let res: Vec<f64> = (3..y.len()).map(|t| y[t] - (y[t - 1] + y[t - 2] + y[t - 3]) / 3.0).collect();
    sd(&res)
}

pub fn reference(series: &[f64]) -> [f64; 22] {
    let y = zscore(series);
    let r = acf(&y);
    let m = mean(&y);
    let above: Vec<bool> = y.iter().map(|v| v - m > 0.0).collect();
    let falling: Vec<bool> = y.windows(2).map(|w| w[1] < w[0]).collect();
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    [
        hist_mode(&y, 5),
        hist_mode(&y, 10),
        f1ecac(&r),
        first_min(&r),
        ami_even_2_5(&y),
        mean(&diffs.iter().map(|d| d.powi(3)).collect::<Vec<_>>()),
        diffs.iter().filter(|d| d.abs() > 0.04).count() as f64 / diffs.len() as f64,
        longest(&above),
        transition_sumdiagcov(&y, &r),
        periodicity(&y),
        embed2(&y, &r),
        gaussian_fmmi(&y),
        tauresrat(&y, &r),
        outlier_mdrmd(&y, 1.0),
        outlier_mdrmd(&y, -1.0),
        welch_area(&y),
        longest(&falling),
        motif_hh(&y),
        fluct_prop_r1(&y, 1, false),
        fluct_prop_r1(&y, 2, true),
        welch_centroid(&y),
        mean3_stderr(&y),
    ]
}

/// AR(1), random walk, noisy sine and positive incidence-like series.
pub fn random_series(rng: &mut ChaCha8Rng, kind: usize, n: usize) -> Vec<f64> {
    let mut e = || -> f64 { StandardNormal.sample(&mut *rng) };
    match kind % 4 {
        0 => {
            let phi = 0.2 + 0.75 * (kind as f64 / 50.0);
            let mut x = 0.0;
            (0..n)
                .map(|_| {
                    x = phi * x + e();
                    x
                })
                .collect()
        }
        1 => {
            let mut x = 0.0;
            (0..n)
                .map(|_| {
                    x += e();
                    x
                })
                .collect()
        }
        2 => {
            let period = 7.0 + kind as f64;
            (0..n).map(|t| (t as f64 * std::f64::consts::TAU / period).sin() + 0.5 * e()).collect()
        }
        _ => {
            let mut level: f64 = 20.0;
            (0..n)
                .map(|_| {
                    level = (level * (1.0 + 0.01 * e())).max(0.5);
                    level + level.sqrt() * e()
                })
                .collect()
        }
    }
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}


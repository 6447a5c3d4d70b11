//! The catch22 feature set.
//!
//! Every feature runs on the z-scored series (mean 0, `N − 1` standard
//! deviation 1). Definitions follow the reference C implementation of
//! catch22, including its conventions for undefined cases: autocorrelation
//! searches that never succeed return the series length, distance and
//! outlier statistics return 0 when their inputs collapse, and the
//! fluctuation-analysis pair returns 0 when fewer than 12 distinct scales
//! exist. Short series (down to 5 points) therefore always produce finite
//! values.
//!
//! Two features depart from the C code: the two `longstretch` statistics
//! count the longest run over the whole series, whereas the C code skips the
//! last point and counts from the previous break, which undercounts by one.

use std::f64::consts::E;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{mean, sample_std, z_normalize, FeatureError};

pub const SF22_NAMES: [&str; 22] = [
    "DN_HistogramMode_5",
    "DN_HistogramMode_10",
    "CO_f1ecac",
    "CO_FirstMin_ac",
    "CO_HistogramAMI_even_2_5",
    "CO_trev_1_num",
    "MD_hrv_classic_pnn40",
    "SB_BinaryStats_mean_longstretch1",
    "SB_TransitionMatrix_3ac_sumdiagcov",
    "PD_PeriodicityWang_th0_01",
    "CO_Embed2_Dist_tau_d_expfit_meandiff",
    "IN_AutoMutualInfoStats_40_gaussian_fmmi",
    "FC_LocalSimple_mean1_tauresrat",
    "DN_OutlierInclude_p_001_mdrmd",
    "DN_OutlierInclude_n_001_mdrmd",
    "SP_Summaries_welch_rect_area_5_1",
    "SB_BinaryStats_diff_longstretch0",
    "SB_MotifThree_quantile_hh",
    "SC_FluctAnal_2_rsrangefit_50_1_logi_prop_r1",
    "SC_FluctAnal_2_dfa_50_1_2_logi_prop_r1",
    "SP_Summaries_welch_rect_centroid",
    "FC_LocalSimple_mean3_stderr",
];

/// Minimum length accepted by [`compute_sf22`].
pub const MIN_LEN: usize = 5;

/// All 22 features in canonical order.
pub fn compute_sf22(series: &[f64]) -> Result<[f64; 22], FeatureError> {
    if series.len() < MIN_LEN {
        return Err(FeatureError::TooShort {
            needed: MIN_LEN,
            actual: series.len(),
        });
    }
    let y = z_normalize(series)?;
    let mut spectral = Spectral::new(y.len());
    let ac = spectral.autocorrelation(&y);
    let welch = spectral.welch_power(&y);

    let out = [
        histogram_mode(&y, 5),
        histogram_mode(&y, 10),
        f1ecac(&ac),
        first_min_ac(&ac),
        histogram_ami_even_2_5(&y),
        trev_1_num(&y),
        hrv_classic_pnn40(&y),
        mean_longstretch1(&y),
        transition_matrix_3ac_sumdiagcov(&y, &ac),
        periodicity_wang_th0_01(&y),
        embed2_dist_expfit_meandiff(&y, &ac),
        automutual_info_40_gaussian_fmmi(&y),
        local_simple_mean1_tauresrat(&y, &ac, &mut spectral),
        outlier_include_mdrmd(&y, 1.0),
        outlier_include_mdrmd(&y, -1.0),
        welch_area_5_1(&welch),
        diff_longstretch0(&y),
        motif_three_quantile_hh(&y),
        fluct_anal_prop_r1(&y, 1, Fluct::RangeFit),
        fluct_anal_prop_r1(&y, 2, Fluct::Dfa),
        welch_centroid(&welch),
        local_simple_mean3_stderr(&y),
    ];
    if out.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite);
    }
    Ok(out)
}

/// Smallest power of two `>= n`.
pub(crate) fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// FFT plans sized for one series length.
struct Spectral {
    ac_fft: Arc<dyn Fft<f64>>,
    ac_ifft: Arc<dyn Fft<f64>>,
    ac_len: usize,
    welch_fft: Arc<dyn Fft<f64>>,
    welch_len: usize,
    planner: FftPlanner<f64>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let ac_len = next_pow2(n) * 2;
        let welch_len = next_pow2(n);
        Spectral {
            ac_fft: planner.plan_fft_forward(ac_len),
            ac_ifft: planner.plan_fft_inverse(ac_len),
            ac_len,
            welch_fft: planner.plan_fft_forward(welch_len),
            welch_len,
            planner,
        }
    }

    /// Biased autocorrelation `r[k] = Σ_t d_t d_{t+k} / Σ_t d_t²` for
    /// `k = 0..n`, via zero-padded FFT.
    fn autocorrelation(&mut self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        if 2 * next_pow2(n) != self.ac_len {
            self.ac_len = 2 * next_pow2(n);
            self.ac_fft = self.planner.plan_fft_forward(self.ac_len);
            self.ac_ifft = self.planner.plan_fft_inverse(self.ac_len);
        }
        let m = mean(y);
        let mut buf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v - m, 0.0)).collect();
        buf.resize(self.ac_len, Complex::new(0.0, 0.0));
        self.ac_fft.process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        self.ac_ifft.process(&mut buf);
        let zero = buf[0].re;
        buf[..n].iter().map(|c| c.re / zero).collect()
    }

    /// One-segment rectangular-window Welch estimate on `next_pow2(n)` bins.
    fn welch_power(&mut self, y: &[f64]) -> Welch {
        let n = y.len();
        let nfft = next_pow2(n);
        if nfft != self.welch_len {
            self.welch_len = nfft;
            self.welch_fft = self.planner.plan_fft_forward(nfft);
        }
        let m = mean(y);
        let mut buf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v - m, 0.0)).collect();
        buf.resize(nfft, Complex::new(0.0, 0.0));
        self.welch_fft.process(&mut buf);
        let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
        Welch::from_power(&power, n)
    }
}

/// Angular-frequency power spectrum from a single rectangular segment.
pub(crate) struct Welch {
    pub w: Vec<f64>,
    pub sw: Vec<f64>,
}

/// The reference implementation's value of π, kept so spectral features
/// agree with it to the last digit.
#[allow(clippy::approx_constant)]
const PI_C22: f64 = 3.14159265359;

impl Welch {
    /// `power[l] = |FFT(y − ȳ)[l]|²` over `nfft` bins, `n` the series length.
    pub(crate) fn from_power(power: &[f64], n: usize) -> Welch {
        let nfft = power.len();
        // Segments of width n with 50% overlap fit floor(n / (n/2)) − 1 = 1
        // times; the window norm² is n.
        let segments = ((n as f64) / (n as f64 / 2.0)).floor() - 1.0;
        let kmu = segments * n as f64;
        let n_out = nfft / 2 + 1;
        let df = 1.0 / next_pow2(n) as f64;
        let mut w = Vec::with_capacity(n_out);
        let mut sw = Vec::with_capacity(n_out);
        for (i, &p) in power.iter().take(n_out).enumerate() {
            let mut s = p / kmu;
            if i > 0 && i < n_out - 1 {
                s *= 2.0;
            }
            w.push(2.0 * PI_C22 * (i as f64 * df));
            sw.push(s / (2.0 * PI_C22));
        }
        Welch { w, sw }
    }
}

fn welch_area_5_1(welch: &Welch) -> f64 {
    if welch.w.len() < 2 {
        return 0.0;
    }
    let dw = welch.w[1] - welch.w[0];
    let upto = welch.sw.len() / 5;
    welch.sw[..upto].iter().sum::<f64>() * dw
}

fn welch_centroid(welch: &Welch) -> f64 {
    let mut cs = 0.0;
    let cumulative: Vec<f64> = welch
        .sw
        .iter()
        .map(|&s| {
            cs += s;
            cs
        })
        .collect();
    let threshold = cumulative.last().copied().unwrap_or(0.0) * 0.5;
    cumulative
        .iter()
        .position(|&c| c > threshold)
        .map(|i| welch.w[i])
        .unwrap_or(0.0)
}

/// Equal-width histogram over `[min, max]`; returns counts and edges.
pub(crate) fn histcounts(y: &[f64], n_bins: usize) -> (Vec<usize>, Vec<f64>) {
    let (lo, hi) = min_max(y);
    let step = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &v in y {
        let raw = (v - lo) / step;
        let idx = if raw.is_finite() && raw > 0.0 { raw as usize } else { 0 };
        counts[idx.min(n_bins - 1)] += 1;
    }
    let edges = (0..=n_bins).map(|i| i as f64 * step + lo).collect();
    (counts, edges)
}

pub(crate) fn min_max(y: &[f64]) -> (f64, f64) {
    y.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Centre of the most populated bin; tied bins are averaged.
fn histogram_mode(y: &[f64], n_bins: usize) -> f64 {
    let (counts, edges) = histcounts(y, n_bins);
    let mut best = 0usize;
    let mut n_best = 0usize;
    let mut acc = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let centre = (edges[i] + edges[i + 1]) * 0.5;
        if c > best {
            best = c;
            n_best = 1;
            acc = centre;
        } else if c == best {
            n_best += 1;
            acc += centre;
        }
    }
    acc / n_best as f64
}

/// Interpolated lag at which the autocorrelation first drops below 1/e.
fn f1ecac(ac: &[f64]) -> f64 {
    let n = ac.len();
    let thresh = 1.0 / E;
    for i in 0..n.saturating_sub(2) {
        if ac[i + 1] < thresh {
            let slope = ac[i + 1] - ac[i];
            return i as f64 + (thresh - ac[i]) / slope;
        }
    }
    n as f64
}

fn first_min_ac(ac: &[f64]) -> f64 {
    let n = ac.len();
    for i in 1..n.saturating_sub(1) {
        if ac[i] < ac[i - 1] && ac[i] < ac[i + 1] {
            return i as f64;
        }
    }
    n as f64
}

/// First lag (capped at `max_tau`) where the autocorrelation is no longer
/// positive.
pub(crate) fn first_zero(ac: &[f64], max_tau: usize) -> usize {
    let mut z = 0;
    while z < max_tau && z < ac.len() && ac[z] > 0.0 {
        z += 1;
    }
    z
}

/// Mutual information between `y_t` and `y_{t+2}` on a 5×5 equal-width grid
/// spanning `[min − 0.1, max + 0.1]`.
fn histogram_ami_even_2_5(y: &[f64]) -> f64 {
    const TAU: usize = 2;
    const BINS: usize = 5;
    let n = y.len();
    if n <= TAU {
        return 0.0;
    }
    let (lo, hi) = min_max(y);
    let step = (hi - lo + 0.2) / BINS as f64;
    let edges: Vec<f64> = (0..=BINS).map(|i| lo + step * i as f64 - 0.1).collect();
    let bin = |v: f64| -> usize {
        // First edge strictly above v; edge 0 lies below every value.
        edges.iter().position(|&e| v < e).unwrap_or(0)
    };
    let mut joint = [[0.0f64; BINS]; BINS];
    let mut total = 0.0;
    for t in 0..n - TAU {
        let (a, b) = (bin(y[t]), bin(y[t + TAU]));
        if (1..=BINS).contains(&a) && (1..=BINS).contains(&b) {
            joint[a - 1][b - 1] += 1.0;
            total += 1.0;
        }
    }
    let mut pa = [0.0; BINS];
    let mut pb = [0.0; BINS];
    for i in 0..BINS {
        for j in 0..BINS {
            joint[i][j] /= total;
            pa[i] += joint[i][j];
            pb[j] += joint[i][j];
        }
    }
    let mut ami = 0.0;
    for i in 0..BINS {
        for j in 0..BINS {
            if joint[i][j] > 0.0 {
                ami += joint[i][j] * (joint[i][j] / (pa[i] * pb[j])).ln();
            }
        }
    }
    ami
}

fn trev_1_num(y: &[f64]) -> f64 {
    let cubes: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).powi(3)).collect();
    mean(&cubes)
}

fn hrv_classic_pnn40(y: &[f64]) -> f64 {
    let n = y.len();
    let hits = y.windows(2).filter(|w| (w[1] - w[0]).abs() * 1000.0 > 40.0).count();
    hits as f64 / (n - 1) as f64
}

fn longest_run(flags: impl Iterator<Item = bool>) -> usize {
    let mut best = 0;
    let mut run = 0;
    for f in flags {
        if f {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

fn mean_longstretch1(y: &[f64]) -> f64 {
    let m = mean(y);
    longest_run(y.iter().map(|&v| v - m > 0.0)) as f64
}

fn diff_longstretch0(y: &[f64]) -> f64 {
    longest_run(y.windows(2).map(|w| w[1] - w[0] < 0.0)) as f64
}

/// Quantile with the reference implementation's interpolation rule.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let edge = 0.5 / n as f64;
    if q < edge {
        return sorted[0];
    }
    if q > 1.0 - edge {
        return sorted[n - 1];
    }
    let idx = n as f64 * q - 0.5;
    let left = idx.floor() as usize;
    let right = idx.ceil() as usize;
    if left == right {
        return sorted[left];
    }
    sorted[left] + (idx - left as f64) * (sorted[right] - sorted[left]) / (right - left) as f64
}

/// Equiprobable symbolisation into `groups` letters (1-based labels).
pub(crate) fn coarsegrain_quantile(y: &[f64], groups: usize) -> Vec<usize> {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut th: Vec<f64> = (0..=groups)
        .map(|i| quantile(&sorted, i as f64 / groups as f64))
        .collect();
    th[0] -= 1.0;
    let mut labels = vec![0usize; y.len()];
    for g in 0..groups {
        for (label, &v) in labels.iter_mut().zip(y) {
            if v > th[g] && v <= th[g + 1] {
                *label = g + 1;
            }
        }
    }
    labels
}

fn transition_matrix_3ac_sumdiagcov(y: &[f64], ac: &[f64]) -> f64 {
    let n = y.len();
    let tau = first_zero(ac, n).max(1);
    let n_down = (n - 1) / tau + 1;
    if n_down < 2 {
        return 0.0;
    }
    let down: Vec<f64> = (0..n_down).map(|i| y[i * tau]).collect();
    let labels = coarsegrain_quantile(&down, 3);
    let mut t = [[0.0f64; 3]; 3];
    for w in labels.windows(2) {
        if w[0] >= 1 && w[1] >= 1 {
            t[w[0] - 1][w[1] - 1] += 1.0;
        }
    }
    for row in t.iter_mut() {
        for v in row.iter_mut() {
            *v /= (n_down - 1) as f64;
        }
    }
    // Sum of the sample variances of the three columns.
    (0..3)
        .map(|j| {
            let col = [t[0][j], t[1][j], t[2][j]];
            let m = col.iter().sum::<f64>() / 3.0;
            col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 2.0
        })
        .sum()
}

/// Least-squares fit of a C² cubic spline with breaks at
/// `0, floor(n/2) − 1, n − 1` (one interior knot) evaluated at `0..n`.
pub(crate) fn spline_trend(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let scale = (n - 1).max(1) as f64;
    let knot = ((n / 2) as f64 - 1.0) / scale;
    let basis = |i: usize| -> [f64; 5] {
        let u = i as f64 / scale;
        let r = (u - knot).max(0.0);
        [1.0, u, u * u, u * u * u, r * r * r]
    };
    let a = DMatrix::from_fn(n, 5, |i, j| basis(i)[j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    match svd.solve(&b, 1e-12) {
        Ok(coef) => (a * coef).iter().copied().collect(),
        Err(_) => y.to_vec(),
    }
}

fn periodicity_wang_th0_01(y: &[f64]) -> f64 {
    const TH: f64 = 0.01;
    let n = y.len();
    let trend = spline_trend(y);
    let resid: Vec<f64> = y.iter().zip(&trend).map(|(a, b)| a - b).collect();
    let acmax = n.div_ceil(3);
    let acf: Vec<f64> = (1..=acmax)
        .map(|tau| {
            if tau >= n {
                return 0.0;
            }
            let m = n - tau;
            (0..m).map(|i| resid[i] * resid[i + tau]).sum::<f64>() / m as f64
        })
        .collect();
    let mut troughs = Vec::new();
    let mut peaks = Vec::new();
    for i in 1..acmax.saturating_sub(1) {
        let slope_in = acf[i] - acf[i - 1];
        let slope_out = acf[i + 1] - acf[i];
        if slope_in < 0.0 && slope_out > 0.0 {
            troughs.push(i);
        } else if slope_in > 0.0 && slope_out < 0.0 {
            peaks.push(i);
        }
    }
    for &ip in &peaks {
        let peak = acf[ip];
        let Some(&it) = troughs.iter().take_while(|&&t| t < ip).last() else {
            continue;
        };
        if peak - acf[it] < TH || peak < 0.0 {
            continue;
        }
        return ip as f64;
    }
    0.0
}

/// Number of bins by the Freedman-style rule `ceil(range / (3.5 σ / n^{1/3}))`.
fn num_bins_auto(y: &[f64]) -> usize {
    let sd = sample_std(y);
    if !(sd >= 0.001) {
        return 0;
    }
    let (lo, hi) = min_max(y);
    ((hi - lo) / (3.5 * sd / (y.len() as f64).powf(1.0 / 3.0))).ceil() as usize
}

fn embed2_dist_expfit_meandiff(y: &[f64], ac: &[f64]) -> f64 {
    let n = y.len();
    let mut tau = first_zero(ac, n);
    if tau as f64 > n as f64 / 10.0 {
        tau = n / 10;
    }
    if n < tau + 3 {
        return 0.0;
    }
    let m = n - tau - 1;
    let d: Vec<f64> = (0..m)
        .map(|i| {
            let a = y[i + 1] - y[i];
            let b = y[i + tau] - y[i + tau + 1];
            (a * a + b * b).sqrt()
        })
        .collect();
    let l = mean(&d);
    let n_bins = num_bins_auto(&d);
    if n_bins == 0 {
        return 0.0;
    }
    let (counts, edges) = histcounts(&d, n_bins);
    let diffs: Vec<f64> = (0..n_bins)
        .map(|i| {
            let p = counts[i] as f64 / m as f64;
            let expf = (-(edges[i] + edges[i + 1]) * 0.5 / l).exp() / l;
            (p - expf.max(0.0)).abs()
        })
        .collect();
    mean(&diffs)
}

/// Pearson correlation between `x[..n−lag]` and `x[lag..]`.
pub(crate) fn autocorr_lag(x: &[f64], lag: usize) -> f64 {
    let m = x.len() - lag;
    let a = &x[..m];
    let b = &x[lag..];
    let (ma, mb) = (mean(a), mean(b));
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (&u, &v) in a.iter().zip(b) {
        num += (u - ma) * (v - mb);
        da += (u - ma) * (u - ma);
        db += (v - mb) * (v - mb);
    }
    num / (da * db).sqrt()
}

fn automutual_info_40_gaussian_fmmi(y: &[f64]) -> f64 {
    let n = y.len();
    let tau = 40usize.min(n.div_ceil(2));
    let ami: Vec<f64> = (1..=tau)
        .map(|lag| {
            if lag >= n {
                return f64::NAN;
            }
            let ac = autocorr_lag(y, lag);
            -0.5 * (1.0 - ac * ac).ln()
        })
        .collect();
    for i in 1..tau.saturating_sub(1) {
        if ami[i] < ami[i - 1] && ami[i] < ami[i + 1] {
            return i as f64;
        }
    }
    tau as f64
}

/// Residuals of forecasting `y_{t+k}` by the mean of the previous `k` points.
fn local_mean_residuals(y: &[f64], k: usize) -> Vec<f64> {
    (0..y.len().saturating_sub(k))
        .map(|i| y[i + k] - y[i..i + k].iter().sum::<f64>() / k as f64)
        .collect()
}

fn local_simple_mean1_tauresrat(y: &[f64], ac: &[f64], spectral: &mut Spectral) -> f64 {
    let res = local_mean_residuals(y, 1);
    let res_ac = spectral.autocorrelation(&res);
    let res_zero = first_zero(&res_ac, res.len()) as f64;
    let y_zero = first_zero(ac, y.len()) as f64;
    res_zero / y_zero
}

fn local_simple_mean3_stderr(y: &[f64]) -> f64 {
    let res = local_mean_residuals(y, 3);
    if res.len() < 2 {
        return 0.0;
    }
    sample_std(&res)
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Median position of threshold exceedances as the threshold sweeps up in
/// steps of 0.01σ, for the positive (`sign = 1`) or negative tail.
fn outlier_include_mdrmd(y: &[f64], sign: f64) -> f64 {
    const INC: f64 = 0.01;
    let n = y.len();
    let work: Vec<f64> = y.iter().map(|&v| sign * v).collect();
    if y.iter().all(|&v| v == y[0]) {
        return 0.0;
    }
    let tot = work.iter().filter(|&&v| v >= 0.0).count();
    let max_val = work.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_val < INC {
        return 0.0;
    }
    let n_thresh = (max_val / INC + 1.0) as usize;
    let mut mean_gap = Vec::with_capacity(n_thresh);
    let mut pct_events = Vec::with_capacity(n_thresh);
    let mut med_pos = Vec::with_capacity(n_thresh);
    let mut hits: Vec<f64> = Vec::with_capacity(n);
    for j in 0..n_thresh {
        let th = j as f64 * INC;
        hits.clear();
        hits.extend(
            work.iter()
                .enumerate()
                .filter(|(_, &v)| v >= th)
                .map(|(i, _)| (i + 1) as f64),
        );
        let k = hits.len();
        let gaps: Vec<f64> = hits.windows(2).map(|w| w[1] - w[0]).collect();
        mean_gap.push(if gaps.is_empty() { f64::NAN } else { mean(&gaps) });
        pct_events.push((k as f64 - 1.0) * 100.0 / tot as f64);
        med_pos.push(if k == 0 { f64::NAN } else { median(&hits) / (n as f64 / 2.0) - 1.0 });
    }
    let mut mj = 0;
    let mut fbi = n_thresh - 1;
    for i in 0..n_thresh {
        if pct_events[i] > 2.0 {
            mj = i;
        }
        if mean_gap[n_thresh - 1 - i].is_nan() {
            fbi = n_thresh - 1 - i;
        }
    }
    let limit = mj.min(fbi);
    median(&med_pos[..=limit])
}

fn motif_three_quantile_hh(y: &[f64]) -> f64 {
    let n = y.len();
    let labels = coarsegrain_quantile(y, 3);
    let mut counts = [[0.0f64; 3]; 3];
    for w in labels.windows(2) {
        if w[0] >= 1 && w[1] >= 1 {
            counts[w[0] - 1][w[1] - 1] += 1.0;
        }
    }
    let mut hh = 0.0;
    for row in counts.iter() {
        for &c in row {
            let p = c / (n as f64 - 1.0);
            if p > 0.0 {
                hh -= p * p.ln();
            }
        }
    }
    hh
}

/// Ordinary least squares `y ≈ m x + b` via the closed-form sums.
pub(crate) fn linreg(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mut sx, mut sx2, mut sxy, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sx += a;
        sx2 += a * a;
        sxy += a * b;
        sy += b;
    }
    let denom = n * sx2 - sx * sx;
    if denom == 0.0 {
        return (0.0, 0.0);
    }
    ((n * sxy - sx * sy) / denom, (sy * sx2 - sx * sxy) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Fluct {
    RangeFit,
    Dfa,
}

/// Log-spaced scales `round(exp(·))` between 5 and `n/2`, deduplicated.
pub(crate) fn fluct_scales(n: usize) -> Vec<usize> {
    let lo = 5f64.ln();
    let hi = ((n / 2) as f64).ln();
    let step = (hi - lo) / 49.0;
    let mut taus: Vec<usize> = (0..50).map(|i| (lo + i as f64 * step).exp().round() as usize).collect();
    taus.dedup();
    taus
}

/// Fraction of scales assigned to the short-scale regime by the best
/// two-segment linear fit of log fluctuation against log scale.
fn fluct_anal_prop_r1(y: &[f64], lag: usize, how: Fluct) -> f64 {
    let n = y.len();
    let taus = fluct_scales(n);
    let ntt = taus.len();
    if ntt < 12 {
        return 0.0;
    }
    // Profile: cumulative sum of the lag-subsampled series.
    let size_cs = n / lag;
    let mut profile = Vec::with_capacity(size_cs);
    let mut acc = 0.0;
    for i in 0..size_cs {
        acc += y[i * lag];
        profile.push(acc);
    }
    let max_tau = *taus.iter().max().unwrap_or(&0);
    let x_reg: Vec<f64> = (1..=max_tau).map(|v| v as f64).collect();

    let mut fluct = Vec::with_capacity(ntt);
    for &tau in &taus {
        let n_buffer = size_cs / tau;
        let mut f = 0.0;
        for j in 0..n_buffer {
            let seg = &profile[j * tau..(j + 1) * tau];
            let (m, b) = linreg(&x_reg[..tau], seg);
            let detrended = seg.iter().enumerate().map(|(k, &v)| v - (m * (k + 1) as f64 + b));
            match how {
                Fluct::RangeFit => {
                    let (lo, hi) = detrended.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    });
                    f += (hi - lo).powi(2);
                }
                Fluct::Dfa => f += detrended.map(|v| v * v).sum::<f64>(),
            }
        }
        fluct.push(match how {
            Fluct::RangeFit => (f / n_buffer as f64).sqrt(),
            Fluct::Dfa => (f / (n_buffer * tau) as f64).sqrt(),
        });
    }

    let log_tt: Vec<f64> = taus.iter().map(|&t| (t as f64).ln()).collect();
    let log_ff: Vec<f64> = fluct.iter().map(|f| f.ln()).collect();
    const MIN_POINTS: usize = 6;
    let sserr: Vec<f64> = (MIN_POINTS..ntt - MIN_POINTS + 1)
        .map(|i| {
            let (m1, b1) = linreg(&log_tt[..i], &log_ff[..i]);
            let (m2, b2) = linreg(&log_tt[i - 1..], &log_ff[i - 1..]);
            let e1: f64 = (0..i).map(|j| (log_tt[j] * m1 + b1 - log_ff[j]).powi(2)).sum::<f64>().sqrt();
            let e2: f64 = (i - 1..ntt)
                .map(|j| (log_tt[j] * m2 + b2 - log_ff[j]).powi(2))
                .sum::<f64>()
                .sqrt();
            e1 + e2
        })
        .collect();
    let minimum = sserr.iter().copied().fold(f64::INFINITY, f64::min);
    let first = sserr.iter().position(|&v| v == minimum).unwrap_or(0);
    let first_min_ind = (first + MIN_POINTS - 1) as f64;
    (first_min_ind + 1.0) / ntt as f64
}

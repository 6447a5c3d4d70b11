//! Empirical incidence: CSV ingest, weekly smoothing, gap imputation,
//! prevalence, renewal-equation Re estimation and T/N labelling.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};
use thiserror::Error;

use crate::dataset::{Label, LabeledWindow};

#[derive(Debug, Error)]
pub enum IncidenceError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("line {line}: date {date} is not after the previous date")]
    Unsorted { line: u64, date: NaiveDate },
    #[error("line {line}: duplicate date {date}")]
    Duplicate { line: u64, date: NaiveDate },
    #[error("line {line}: negative count {value}")]
    Negative { line: u64, value: f64 },
    #[error("expected {expected} cadence")]
    Cadence { expected: &'static str },
    #[error("irregular date spacing at {date}")]
    Irregular { date: NaiveDate },
    #[error("cannot impute: {0} value missing")]
    MissingEndpoint(&'static str),
    #[error("{date}: deaths + recovered exceed cumulative cases")]
    Inconsistent { date: NaiveDate },
    #[error("series too short: need {needed} days, got {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("infection pressure is zero throughout")]
    ZeroPressure,
    #[error("no suffix with Re < 1 of at least {min_len} days (found {found})")]
    NoNullSuffix { min_len: usize, found: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cadence {
    Daily,
    Weekly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidenceSeries {
    pub dates: Vec<NaiveDate>,
    /// `None` marks a missing observation.
    pub counts: Vec<Option<f64>>,
    pub cadence: Cadence,
}

impl IncidenceSeries {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Counts with every value present, or an error naming the first gap.
    pub fn values(&self) -> Result<Vec<f64>, IncidenceError> {
        self.counts
            .iter()
            .zip(&self.dates)
            .map(|(c, d)| c.ok_or_else(|| IncidenceError::Invalid(format!("missing value on {d}"))))
            .collect()
    }
}

/// Column layout of an input CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schema {
    /// `date,count`
    Incidence,
    /// `date,cumulative,deaths,recovered`, reduced to prevalence.
    Prevalence,
}

fn cadence_of(dates: &[NaiveDate]) -> Result<Cadence, IncidenceError> {
    if dates.len() < 2 {
        return Ok(Cadence::Daily);
    }
    let step = (dates[1] - dates[0]).num_days();
    let cadence = match step {
        1 => Cadence::Daily,
        7 => Cadence::Weekly,
        _ => return Err(IncidenceError::Irregular { date: dates[1] }),
    };
    for w in dates.windows(2) {
        if (w[1] - w[0]).num_days() != step {
            return Err(IncidenceError::Irregular { date: w[1] });
        }
    }
    Ok(cadence)
}

fn parse_value(field: &str, line: u64) -> Result<Option<f64>, IncidenceError> {
    let f = field.trim();
    if f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    let v: f64 = f.parse().map_err(|_| IncidenceError::Parse {
        line,
        msg: format!("bad number `{f}`"),
    })?;
    if !v.is_finite() {
        return Err(IncidenceError::Parse {
            line,
            msg: format!("non-finite number `{f}`"),
        });
    }
    if v < 0.0 {
        return Err(IncidenceError::Negative { line, value: v });
    }
    Ok(Some(v))
}

/// Parses CSV text. Empty, `NA` or `NaN` fields mark missing values.
pub fn parse_incidence<R: Read>(reader: R, schema: Schema) -> Result<IncidenceSeries, IncidenceError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let expected: &[&str] = match schema {
        Schema::Incidence => &["date", "count"],
        Schema::Prevalence => &["date", "cumulative", "deaths", "recovered"],
    };
    let header = rdr.headers().map_err(|e| IncidenceError::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    let got: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != expected {
        return Err(IncidenceError::Parse {
            line: 1,
            msg: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        });
    }
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut counts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| IncidenceError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| IncidenceError::Parse {
            line,
            msg: format!("bad date `{}`: {e}", &rec[0]),
        })?;
        if let Some(&prev) = dates.last() {
            if date == prev {
                return Err(IncidenceError::Duplicate { line, date });
            }
            if date < prev {
                return Err(IncidenceError::Unsorted { line, date });
            }
        }
        let value = match schema {
            Schema::Incidence => parse_value(&rec[1], line)?,
            Schema::Prevalence => {
                let c = parse_value(&rec[1], line)?;
                let d = parse_value(&rec[2], line)?;
                let r = parse_value(&rec[3], line)?;
                match (c, d, r) {
                    (Some(c), Some(d), Some(r)) => Some(prevalence_value(c, d, r, date)?),
                    _ => None,
                }
            }
        };
        dates.push(date);
        counts.push(value);
    }
    let cadence = cadence_of(&dates)?;
    Ok(IncidenceSeries { dates, counts, cadence })
}

pub fn load_incidence(path: &Path, schema: Schema) -> Result<IncidenceSeries, IncidenceError> {
    parse_incidence(std::fs::File::open(path)?, schema)
}

/// Spreads each weekly count evenly over the seven days starting at its
/// date. The seventh day absorbs rounding so every week sums exactly.
pub fn weekly_to_daily(series: &IncidenceSeries) -> Result<IncidenceSeries, IncidenceError> {
    if series.cadence != Cadence::Weekly {
        return Err(IncidenceError::Cadence { expected: "weekly" });
    }
    let mut dates = Vec::with_capacity(series.len() * 7);
    let mut counts = Vec::with_capacity(series.len() * 7);
    for (d, c) in series.dates.iter().zip(&series.counts) {
        let share = c.map(|w| w / 7.0);
        let mut acc = 0.0;
        for k in 0..7 {
            dates.push(*d + chrono::Days::new(k));
            counts.push(match (c, share) {
                (Some(w), Some(s)) => {
                    if k < 6 {
                        acc += s;
                        Some(s)
                    } else {
                        Some(w - acc)
                    }
                }
                _ => None,
            });
        }
    }
    Ok(IncidenceSeries {
        dates,
        counts,
        cadence: Cadence::Daily,
    })
}

/// Fills interior gaps by linear interpolation between the nearest present
/// neighbours.
pub fn impute_linear(series: &IncidenceSeries) -> Result<IncidenceSeries, IncidenceError> {
    let c = &series.counts;
    if c.is_empty() {
        return Ok(series.clone());
    }
    if c[0].is_none() {
        return Err(IncidenceError::MissingEndpoint("first"));
    }
    if c[c.len() - 1].is_none() {
        return Err(IncidenceError::MissingEndpoint("last"));
    }
    let mut out = c.clone();
    let mut last = 0;
    for i in 1..c.len() {
        if let Some(v) = c[i] {
            let a = c[last].expect("present");
            let span = (i - last) as f64;
            for (k, slot) in out.iter_mut().enumerate().take(i).skip(last + 1) {
                let t = (k - last) as f64 / span;
                *slot = Some(a + (v - a) * t);
            }
            last = i;
        }
    }
    Ok(IncidenceSeries {
        dates: series.dates.clone(),
        counts: out,
        cadence: series.cadence,
    })
}

fn prevalence_value(cum: f64, deaths: f64, recovered: f64, date: NaiveDate) -> Result<f64, IncidenceError> {
    let p = cum - deaths - recovered;
    if p < 0.0 {
        return Err(IncidenceError::Inconsistent { date });
    }
    Ok(p)
}

/// `cumulative − deaths − recovered` per date.
pub fn prevalence_from_cumulative(
    dates: &[NaiveDate],
    cumulative: &[f64],
    deaths: &[f64],
    recovered: &[f64],
) -> Result<IncidenceSeries, IncidenceError> {
    let n = dates.len();
    if cumulative.len() != n || deaths.len() != n || recovered.len() != n {
        return Err(IncidenceError::Invalid("misaligned prevalence inputs".into()));
    }
    let counts = (0..n)
        .map(|i| prevalence_value(cumulative[i], deaths[i], recovered[i], dates[i]).map(Some))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IncidenceSeries {
        dates: dates.to_vec(),
        counts,
        cadence: cadence_of(dates)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerialInterval {
    pub mean: f64,
    pub sd: f64,
}

impl SerialInterval {
    pub const COVID19: SerialInterval = SerialInterval { mean: 6.3, sd: 4.2 };
    pub const SARS: SerialInterval = SerialInterval { mean: 8.4, sd: 3.8 };

    /// Daily weights `w_1..w_max` (index 0 holds `w_1`) from the
    /// one-day-shifted gamma discretisation, renormalised to sum to 1.
    pub fn discretize(&self, max_days: usize) -> Result<Vec<f64>, IncidenceError> {
        if !(self.mean > 1.0 && self.sd > 0.0) {
            return Err(IncidenceError::Invalid(format!(
                "serial interval needs mean > 1 and sd > 0, got {} / {}",
                self.mean, self.sd
            )));
        }
        let shape = ((self.mean - 1.0) / self.sd).powi(2);
        let scale = self.sd * self.sd / (self.mean - 1.0);
        let g = Gamma::new(shape, 1.0 / scale).map_err(|e| IncidenceError::Invalid(e.to_string()))?;
        let g1 = Gamma::new(shape + 1.0, 1.0 / scale).map_err(|e| IncidenceError::Invalid(e.to_string()))?;
        let f = |x: f64| if x <= 0.0 { 0.0 } else { g.cdf(x) };
        let f1 = |x: f64| if x <= 0.0 { 0.0 } else { g1.cdf(x) };
        let mut w: Vec<f64> = (1..=max_days)
            .map(|k| {
                let k = k as f64;
                let v = k * f(k) + (k - 2.0) * f(k - 2.0) - 2.0 * (k - 1.0) * f(k - 1.0)
                    + shape * scale * (2.0 * f1(k - 1.0) - f1(k - 2.0) - f1(k));
                v.max(0.0)
            })
            .collect();
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReConfig {
    pub window: usize,
    pub prior_shape: f64,
    pub prior_scale: f64,
    pub max_si_days: usize,
}

impl Default for ReConfig {
    fn default() -> Self {
        ReConfig {
            window: 7,
            prior_shape: 1.0,
            prior_scale: 5.0,
            max_si_days: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReSeries {
    pub dates: Vec<NaiveDate>,
    pub re_mean: Vec<Option<f64>>,
    pub re_lo: Vec<Option<f64>>,
    pub re_hi: Vec<Option<f64>>,
}

impl ReSeries {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "date,re_mean,re_lo,re_hi")?;
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
        for i in 0..self.dates.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.dates[i],
                f(self.re_mean[i]),
                f(self.re_lo[i]),
                f(self.re_hi[i])
            )?;
        }
        Ok(())
    }
}

/// Infection pressure `Λ_t = Σ_{s≥1} I_{t−s} w_s`.
pub fn infection_pressure(incidence: &[f64], weights: &[f64]) -> Vec<f64> {
    (0..incidence.len())
        .map(|t| {
            weights
                .iter()
                .enumerate()
                .take(t)
                .map(|(k, w)| w * incidence[t - 1 - k])
                .sum()
        })
        .collect()
}

/// Renewal-equation estimate over trailing windows with a gamma prior.
/// The posterior for the window ending at `t` is
/// `Gamma(a + Σ I, rate = 1/b + Σ Λ)`; days whose window is incomplete or
/// has zero pressure are left undefined.
pub fn estimate_re(series: &IncidenceSeries, si: &SerialInterval, cfg: &ReConfig) -> Result<ReSeries, IncidenceError> {
    if series.cadence != Cadence::Daily {
        return Err(IncidenceError::Cadence { expected: "daily" });
    }
    if cfg.window == 0 || !(cfg.prior_shape > 0.0) || !(cfg.prior_scale > 0.0) {
        return Err(IncidenceError::Invalid("Re window and prior must be positive".into()));
    }
    let x = series.values()?;
    let needed = cfg.window + 2;
    if x.len() < needed {
        return Err(IncidenceError::TooShort {
            needed,
            actual: x.len(),
        });
    }
    let w = si.discretize(cfg.max_si_days)?;
    let lam = infection_pressure(&x, &w);
    if lam.iter().all(|&v| v == 0.0) {
        return Err(IncidenceError::ZeroPressure);
    }
    let n = x.len();
    let (mut mean, mut lo, mut hi) = (vec![None; n], vec![None; n], vec![None; n]);
    for t in (cfg.window - 1)..n {
        let range = t + 1 - cfg.window..=t;
        let si_sum: f64 = x[range.clone()].iter().sum();
        let lam_sum: f64 = lam[range].iter().sum();
        if lam_sum <= 0.0 {
            continue;
        }
        let shape = cfg.prior_shape + si_sum;
        let rate = 1.0 / cfg.prior_scale + lam_sum;
        let post = Gamma::new(shape, rate).map_err(|e| IncidenceError::Invalid(e.to_string()))?;
        mean[t] = Some(shape / rate);
        lo[t] = Some(post.inverse_cdf(0.025));
        hi[t] = Some(post.inverse_cdf(0.975));
    }
    Ok(ReSeries {
        dates: series.dates.clone(),
        re_mean: mean,
        re_lo: lo,
        re_hi: hi,
    })
}

/// Maximal runs `[k0, k]` with `R̂ < 1`, bracketed by `R̂ ≥ 1` on both
/// sides, of at least `min_len` days. Undefined days break runs.
pub fn t_intervals(re: &[Option<f64>], min_len: usize) -> Vec<(usize, usize)> {
    let below = |i: usize| matches!(re[i], Some(v) if v < 1.0);
    let at_or_above = |i: usize| matches!(re[i], Some(v) if v >= 1.0);
    let mut out = Vec::new();
    let mut i = 0;
    while i < re.len() {
        if !below(i) {
            i += 1;
            continue;
        }
        let k0 = i;
        while i < re.len() && below(i) {
            i += 1;
        }
        let k = i - 1;
        if k0 > 0 && at_or_above(k0 - 1) && i < re.len() && at_or_above(i) && k - k0 + 1 >= min_len {
            out.push((k0, k));
        }
    }
    out
}

pub fn label_empirical_t(
    series: &IncidenceSeries,
    re: &ReSeries,
    min_len: usize,
    prefix: &str,
) -> Result<Vec<LabeledWindow>, IncidenceError> {
    if re.re_mean.len() != series.len() {
        return Err(IncidenceError::Invalid("Re series not aligned with incidence".into()));
    }
    let x = series.values()?;
    Ok(t_intervals(&re.re_mean, min_len)
        .into_iter()
        .map(|(a, b)| LabeledWindow::new(x[a..=b].to_vec(), Label::T, format!("{prefix}-T-{}", series.dates[a]), 0))
        .collect())
}

/// Start of the longest suffix on which `R̂ < 1` holds every day.
pub fn null_suffix_start(re: &[Option<f64>]) -> usize {
    re.iter()
        .rposition(|v| !matches!(v, Some(x) if *x < 1.0))
        .map(|i| i + 1)
        .unwrap_or(0)
}

/// `n_windows` random sub-windows of the final `R̂ < 1` suffix, each with
/// a uniform length in `[min_len, suffix]` and a uniform start.
pub fn label_empirical_n<R: Rng + ?Sized>(
    series: &IncidenceSeries,
    re: &ReSeries,
    n_windows: usize,
    min_len: usize,
    rng: &mut R,
    prefix: &str,
) -> Result<Vec<LabeledWindow>, IncidenceError> {
    if re.re_mean.len() != series.len() {
        return Err(IncidenceError::Invalid("Re series not aligned with incidence".into()));
    }
    if min_len == 0 {
        return Err(IncidenceError::Invalid("min_len must be >= 1".into()));
    }
    let x = series.values()?;
    let start = null_suffix_start(&re.re_mean);
    let suffix = x.len() - start;
    if suffix < min_len {
        return Err(IncidenceError::NoNullSuffix { min_len, found: suffix });
    }
    Ok((0..n_windows)
        .map(|i| {
            let len = rng.random_range(min_len..=suffix);
            let a = start + rng.random_range(0..=suffix - len);
            LabeledWindow::new(x[a..a + len].to_vec(), Label::N, format!("{prefix}-N-{i:05}"), 0)
        })
        .collect())
}

/// Drops the last `days` points.
pub fn truncate_tail(window: &LabeledWindow, days: usize) -> Result<LabeledWindow, IncidenceError> {
    if window.values.len() <= days {
        return Err(IncidenceError::TooShort {
            needed: days + 1,
            actual: window.values.len(),
        });
    }
    let mut w = window.clone();
    w.values.truncate(w.values.len() - days);
    w.length = w.values.len();
    Ok(w)
}

pub fn scale_counts(window: &LabeledWindow, factor: f64) -> Result<LabeledWindow, IncidenceError> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(IncidenceError::Invalid(format!("scale factor {factor} must be > 0")));
    }
    let mut w = window.clone();
    for v in &mut w.values {
        *v *= factor;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn daily(values: &[f64]) -> IncidenceSeries {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        IncidenceSeries {
            dates: (0..values.len()).map(|i| d0 + chrono::Days::new(i as u64)).collect(),
            counts: values.iter().map(|&v| Some(v)).collect(),
            cadence: Cadence::Daily,
        }
    }

    #[test]
    fn parses_two_point_series() {
        let s = parse_incidence("date,count\n2020-01-26,12\n2020-01-27,15\n".as_bytes(), Schema::Incidence).unwrap();
        assert_eq!(s.counts, vec![Some(12.0), Some(15.0)]);
        assert_eq!(s.cadence, Cadence::Daily);
    }

    #[test]
    fn rejects_bad_rows() {
        let neg = parse_incidence("date,count\n2020-01-26,-1\n".as_bytes(), Schema::Incidence);
        assert!(matches!(neg, Err(IncidenceError::Negative { line: 2, .. })));
        let dup = parse_incidence("date,count\n2020-01-26,1\n2020-01-26,2\n".as_bytes(), Schema::Incidence);
        assert!(matches!(dup, Err(IncidenceError::Duplicate { line: 3, .. })));
        let uns = parse_incidence("date,count\n2020-01-27,1\n2020-01-26,2\n".as_bytes(), Schema::Incidence);
        assert!(matches!(uns, Err(IncidenceError::Unsorted { .. })));
        let bad = parse_incidence("date,count\n2020-01-26,x\n".as_bytes(), Schema::Incidence);
        assert!(matches!(bad, Err(IncidenceError::Parse { line: 2, .. })));
        let gap = parse_incidence("date,count\n2020-01-26,1\n2020-01-28,2\n".as_bytes(), Schema::Incidence);
        assert!(matches!(gap, Err(IncidenceError::Irregular { .. })));
    }

    #[test]
    fn missing_markers_and_prevalence_mode() {
        let s = parse_incidence("date,count\n2020-01-01,2\n2020-01-02,NA\n2020-01-03,\n2020-01-04,8\n".as_bytes(), Schema::Incidence)
            .unwrap();
        assert_eq!(impute_linear(&s).unwrap().values().unwrap(), vec![2.0, 4.0, 6.0, 8.0]);
        let p = parse_incidence(
            "date,cumulative,deaths,recovered\n2020-03-01,100,10,20\n2020-03-02,5,5,0\n".as_bytes(),
            Schema::Prevalence,
        )
        .unwrap();
        assert_eq!(p.values().unwrap(), vec![70.0, 0.0]);
        let bad = parse_incidence("date,cumulative,deaths,recovered\n2020-03-01,5,4,2\n".as_bytes(), Schema::Prevalence);
        assert!(matches!(bad, Err(IncidenceError::Inconsistent { .. })));
    }

    #[test]
    fn weekly_smoothing_conserves_each_week() {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let weekly = IncidenceSeries {
            dates: vec![d0, d0 + chrono::Days::new(7), d0 + chrono::Days::new(14)],
            counts: vec![Some(70.0), Some(7.0), Some(1.0)],
            cadence: Cadence::Weekly,
        };
        let d = weekly_to_daily(&weekly).unwrap();
        let v = d.values().unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(&v[..14], &[10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(v[14..].iter().sum::<f64>(), 1.0);
        for x in &v[14..] {
            assert!((x - 1.0 / 7.0).abs() < 1e-15);
        }
        assert_eq!(d.dates[20], d0 + chrono::Days::new(20));
        assert!(weekly_to_daily(&d).is_err());
    }

    #[test]
    fn imputation_rules() {
        let mut s = daily(&[2.0, 0.0, 4.0]);
        s.counts[1] = None;
        assert_eq!(impute_linear(&s).unwrap().values().unwrap(), vec![2.0, 3.0, 4.0]);
        let full = daily(&[1.0, 5.0, 2.0]);
        assert_eq!(impute_linear(&full).unwrap(), full);
        let mut e = daily(&[1.0, 2.0]);
        e.counts[0] = None;
        assert!(matches!(impute_linear(&e), Err(IncidenceError::MissingEndpoint("first"))));
    }

    #[test]
    fn serial_interval_weights() {
        for si in [SerialInterval::COVID19, SerialInterval::SARS] {
            let w = si.discretize(60).unwrap();
            assert_eq!(w.len(), 60);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let mean: f64 = w.iter().enumerate().map(|(k, v)| (k + 1) as f64 * v).sum();
            assert!((mean - si.mean).abs() / si.mean < 0.01, "{mean}");
            assert!(w.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn pressure_matches_direct_sum() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        let w = [0.5, 0.3, 0.2];
        let lam = infection_pressure(&x, &w);
        assert_eq!(lam[0], 0.0);
        assert!((lam[1] - 1.5).abs() < 1e-15);
        assert!((lam[4] - (0.5 * 1.0 + 0.3 * 4.0 + 0.2 * 1.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_incidence_gives_unit_re() {
        let s = daily(&[100.0; 120]);
        let re = estimate_re(&s, &SerialInterval::COVID19, &ReConfig::default()).unwrap();
        for t in 60..120 {
            let m = re.re_mean[t].unwrap();
            assert!((m - 1.0).abs() < 0.02, "{t}: {m}");
            assert!(re.re_lo[t].unwrap() < m && m < re.re_hi[t].unwrap());
        }
        assert_eq!(re.re_mean[5], None);
        let zeros = daily(&[0.0; 30]);
        assert!(matches!(
            estimate_re(&zeros, &SerialInterval::COVID19, &ReConfig::default()),
            Err(IncidenceError::ZeroPressure)
        ));
        assert!(matches!(
            estimate_re(&daily(&[1.0; 8]), &SerialInterval::COVID19, &ReConfig::default()),
            Err(IncidenceError::TooShort { .. })
        ));
    }

    #[test]
    fn t_rule_on_small_sequence() {
        let re = [Some(1.2), Some(0.9), Some(0.8), Some(1.1)];
        assert_eq!(t_intervals(&re, 2), vec![(1, 2)]);
        assert!(t_intervals(&[Some(0.5), Some(0.9), Some(0.2)], 1).is_empty());
        let mut long = vec![Some(1.5)];
        long.extend(std::iter::repeat_n(Some(0.5), 13));
        long.push(Some(1.5));
        assert!(t_intervals(&long, 14).is_empty());
        assert_eq!(t_intervals(&long, 13), vec![(1, 13)]);
    }

    #[test]
    fn n_windows_stay_inside_suffix() {
        let n = 120;
        let s = daily(&(0..n).map(|i| i as f64).collect::<Vec<_>>());
        let mut re = ReSeries {
            dates: s.dates.clone(),
            re_mean: vec![Some(1.3); n],
            re_lo: vec![None; n],
            re_hi: vec![None; n],
        };
        for v in re.re_mean.iter_mut().skip(40) {
            *v = Some(0.7);
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let ws = label_empirical_n(&s, &re, 1200, 8, &mut rng, "sars").unwrap();
        assert_eq!(ws.len(), 1200);
        for w in &ws {
            assert!(w.values.len() >= 8);
            assert!(w.values[0] >= 40.0);
            assert_eq!(w.label, Label::N);
        }
        let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(label_empirical_n(&s, &re, 1200, 8, &mut rng2, "sars").unwrap(), ws);

        for v in re.re_mean.iter_mut().take(113) {
            *v = Some(1.3);
        }
        assert!(matches!(
            label_empirical_n(&s, &re, 10, 8, &mut rng, "x"),
            Err(IncidenceError::NoNullSuffix { found: 7, .. })
        ));
    }

    #[test]
    fn tail_and_scale() {
        let w = LabeledWindow::new((0..20).map(|v| v as f64).collect(), Label::T, "w", 0);
        assert_eq!(truncate_tail(&w, 7).unwrap().values.len(), 13);
        let short = LabeledWindow::new(vec![1.0; 7], Label::T, "s", 0);
        assert!(truncate_tail(&short, 7).is_err());
        let two = LabeledWindow::new(vec![1.0, 2.0], Label::T, "t", 0);
        assert_eq!(scale_counts(&two, 5.0).unwrap().values, vec![5.0, 10.0]);
    }

    #[test]
    fn re_csv_has_header_and_na() {
        let s = daily(&[10.0; 12]);
        let re = estimate_re(&s, &SerialInterval::COVID19, &ReConfig::default()).unwrap();
        let mut buf = Vec::new();
        re.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("date,re_mean,re_lo,re_hi"));
        assert_eq!(lines.next(), Some("2020-01-01,NA,NA,NA"));
    }
}

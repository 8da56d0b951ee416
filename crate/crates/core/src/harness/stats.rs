//! Summary statistics over ladder records.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::LadderRecord;

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) − F_b(x)|`, exact.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter(
            "KS needs two nonempty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("KS samples contain NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorSummary {
    MedianAbs,
    Rmse,
}

impl std::str::FromStr for ErrorSummary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median-abs" | "median" => Ok(Self::MedianAbs),
            "rmse" => Ok(Self::Rmse),
            other => Err(Error::InvalidParameter(format!(
                "unknown error summary {other:?}"
            ))),
        }
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

fn summarize(errors: &[f64], how: ErrorSummary) -> f64 {
    match how {
        ErrorSummary::MedianAbs => {
            let mut abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
            median(&mut abs)
        }
        ErrorSummary::Rmse => {
            (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
        }
    }
}

/// Fitted power law `summary(n) ≈ e^{intercept} n^{slope}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    pub component: String,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// `(n, summary)` pairs the line was fitted to.
    pub points: Vec<(usize, f64)>,
}

pub const MIN_LADDER_POINTS: usize = 4;
pub const MIN_REPLICATES: usize = 50;

/// Ordinary least squares of `y` on `x`: `(slope, slope_se, intercept)`.
pub fn ols_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se = if k > 2.0 {
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, se, intercept)
}

/// Per-n summaries of |error| for one component, optionally without exact-zero records.
pub fn ladder_summaries(
    records: &[LadderRecord],
    component: &str,
    how: ErrorSummary,
    exclude_zero_flagged: bool,
) -> Vec<(usize, usize, f64)> {
    let mut ns: Vec<usize> = records
        .iter()
        .filter(|r| r.component == component)
        .map(|r| r.n)
        .collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let errs: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n && r.component == component && !r.failed())
                .filter(|r| !(exclude_zero_flagged && r.zero_flag))
                .map(|r| r.error)
                .collect();
            let s = if errs.is_empty() {
                0.0
            } else {
                summarize(&errs, how)
            };
            (n, errs.len(), s)
        })
        .collect()
}

/// Log-log slope of the error summary against `n`.
pub fn fit_rate(
    records: &[LadderRecord],
    component: &str,
    how: ErrorSummary,
    exclude_zero_flagged: bool,
) -> Result<RateEstimate> {
    let per_n = ladder_summaries(records, component, how, exclude_zero_flagged);
    if per_n.len() < MIN_LADDER_POINTS {
        return Err(Error::RateFit(format!(
            "component {component}: {} ladder points, need at least {MIN_LADDER_POINTS}",
            per_n.len()
        )));
    }
    if let Some((n, count, _)) = per_n.iter().find(|(_, c, _)| *c < MIN_REPLICATES) {
        return Err(Error::RateFit(format!(
            "component {component}: only {count} usable replicates at n = {n}, need {MIN_REPLICATES}"
        )));
    }
    if let Some((n, _, _)) = per_n.iter().find(|(_, _, s)| *s <= 0.0) {
        return Err(Error::RateFit(format!(
            "component {component}: error summary is 0 at n = {n}; exclude exact-zero records or skip the fit"
        )));
    }
    let x: Vec<f64> = per_n.iter().map(|(n, _, _)| (*n as f64).ln()).collect();
    let y: Vec<f64> = per_n.iter().map(|(_, _, s)| s.ln()).collect();
    let (slope, slope_se, intercept) = ols_line(&x, &y);
    Ok(RateEstimate {
        component: component.to_string(),
        slope,
        slope_se,
        intercept,
        n_min: per_n.first().map(|p| p.0).unwrap_or(0),
        n_max: per_n.last().map(|p| p.0).unwrap_or(0),
        points: per_n.iter().map(|(n, _, s)| (*n, *s)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroFraction {
    pub fraction: f64,
    pub std_error: f64,
    pub count: usize,
}

/// Fraction of exact-zero flags with its binomial standard error `√(p̂(1−p̂)/R)`.
pub fn zero_fraction<'a, I>(records: I, component: &str) -> Result<ZeroFraction>
where
    I: IntoIterator<Item = &'a LadderRecord>,
{
    let (mut zeros, mut count) = (0usize, 0usize);
    for r in records
        .into_iter()
        .filter(|r| r.component == component && !r.failed())
    {
        count += 1;
        zeros += r.zero_flag as usize;
    }
    if count == 0 {
        return Err(Error::InvalidParameter(format!(
            "no records for component {component}"
        )));
    }
    let p = zeros as f64 / count as f64;
    Ok(ZeroFraction {
        fraction: p,
        std_error: (p * (1.0 - p) / count as f64).sqrt(),
        count,
    })
}

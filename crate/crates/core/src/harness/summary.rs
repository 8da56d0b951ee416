//! Per-experiment summaries: fitted rates, exact-zero and split fractions, KS distances.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::kmeans::{KmeansInit, COMPONENT_LABELS};
use crate::estimators::shorth::{shorth_population, ShorthDensity};
use crate::harness::{
    fit_rate, ks_two_sample, zero_fraction, ErrorSummary, Experiment, LadderConfig, LadderRecord,
    RateEstimate, SPLIT_COMPONENT,
};
use crate::limits::{
    estimate_kmeans_cov, sample_chernoff_argmax, sample_kmeans_limit, sample_lasso_limits,
    ChernoffConfig,
};
use crate::rates::{
    compute_lemma1_rate, compute_theorem3_rates, fraction_string, CrossTerm, Exponent, Lemma1Spec,
    NoiseTerm, RateSpec,
};

/// Variance of the Gaussian in the shorth radius limit as usually stated.
pub const SHORTH_Z_VARIANCE_STATED: f64 = 0.5;
/// Variance of the same Gaussian from the binomial count of a half-sample window.
pub const SHORTH_Z_VARIANCE_BINOMIAL: f64 = 0.25;

/// Above this exact-zero fraction at the top `n` the Lasso second component is reported
/// as collapsed instead of fitted.
pub const COLLAPSE_FRACTION: f64 = 0.9;

/// Population second moment of a centered Uniform[−1, 1] design column.
const LASSO_C11: f64 = 1.0 / 3.0;

fn q(n: i64, d: i64) -> Exponent {
    Exponent::new(n, d)
}

fn lemma1(
    alpha: Exponent,
    beta: Exponent,
    noise: &[(Exponent, Exponent)],
) -> Result<(Exponent, Exponent)> {
    compute_lemma1_rate(&Lemma1Spec {
        alpha,
        beta,
        noise_terms: noise
            .iter()
            .map(|&(gamma, eta)| NoiseTerm { gamma, eta })
            .collect(),
    })
}

/// Exponent `τ` with `error = O_p(n^{−τ})` for a component, or `None` when the
/// component has no power-law limit.
pub fn theoretical_rate(experiment: Experiment, component: &str) -> Result<Option<Exponent>> {
    let rate = match (experiment, component) {
        // quadratic in a, penalty of order n^{-1/2}|b|^{1/2}, linear noise n^{-1/2}|a|
        (Experiment::Lasso, "alpha1") => Some(lemma1(q(2, 1), q(1, 2), &[(q(1, 1), q(1, 2))])?.0),
        (Experiment::Lasso, "alpha2") => None,
        // center: quadratic drift, noise n^{-1/2}|ε| and n^{-2/3}
        (Experiment::Shorth, "m") => {
            Some(lemma1(q(2, 1), q(2, 1), &[(q(1, 1), q(1, 2)), (q(0, 1), q(2, 3))])?.0)
        }
        (Experiment::Shorth, "r") => Some(lemma1(q(2, 1), q(2, 1), &[(q(1, 1), q(1, 2))])?.0),
        (Experiment::Kmeans, c) if COMPONENT_LABELS.contains(&c) => {
            let r = compute_theorem3_rates(&RateSpec::new(
                q(3, 1),
                q(2, 1),
                vec![CrossTerm::new(q(2, 1), q(1, 1)); 3],
            ))?;
            Some(if c == "delta_s" || c == "eps_d" {
                r.tau_a
            } else {
                r.tau_b
            })
        }
        (Experiment::Kmeans, SPLIT_COMPONENT) => None,
        (e, c) => {
            return Err(Error::InvalidParameter(format!(
                "no component {c:?} in experiment {}",
                e.name()
            )))
        }
    };
    Ok(rate)
}

/// Errors at sample size `n` multiplied by `n^τ`, failed records skipped.
pub fn rescaled_errors(
    records: &[LadderRecord],
    component: &str,
    n: usize,
    tau: Exponent,
) -> Vec<f64> {
    let scale = (n as f64).powf(*tau.numer() as f64 / *tau.denom() as f64);
    records
        .iter()
        .filter(|r| r.n == n && r.component == component && !r.failed())
        .map(|r| r.error * scale)
        .collect()
}

/// A reference limit law for one rescaled component.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum LimitLaw {
    /// `N(−λ₀/(4C₁₁), σ²/C₁₁)`.
    LassoNormal { c11: f64, lambda0: f64, sigma: f64 },
    /// `Z/c₁` with `Z ~ N(0, z_variance)`.
    ShorthRadius { c1: f64, z_variance: f64 },
    /// Argmax of `c₂t² + √c₁B(t)`.
    Chernoff {
        c1: f64,
        c2: f64,
        horizon: f64,
        step: f64,
    },
    /// One marginal of the k-means limit `(s*, t*)`.
    KmeansMarginal { index: usize, cov_samples: usize },
}

impl LimitLaw {
    /// Short file-name-safe label.
    pub fn slug(&self) -> String {
        match self {
            Self::LassoNormal { .. } => "normal".into(),
            Self::ShorthRadius { z_variance, .. } => format!("normal_var{z_variance}"),
            Self::Chernoff { .. } => "chernoff".into(),
            Self::KmeansMarginal { .. } => "kmeans_limit".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryOptions {
    pub error_summary: ErrorSummary,
    /// Sample size of the KS comparisons; the top of the ladder when `None`.
    pub ks_n: Option<usize>,
    /// Limit-law draws per reference; the replicate count when `None`.
    pub limit_draws: Option<usize>,
    /// Monte Carlo size for the k-means score covariance.
    pub kmeans_cov_samples: usize,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            error_summary: ErrorSummary::MedianAbs,
            ks_n: None,
            limit_draws: None,
            kmeans_cov_samples: 1_000_000,
        }
    }
}

/// Limit-law draws for every component of the experiment that has one, as
/// `(component, law, draws)`.
pub fn limit_reference(
    cfg: &LadderConfig,
    draws: usize,
    opts: &SummaryOptions,
) -> Result<LimitReferences> {
    let mut out = Vec::new();
    match cfg.experiment {
        Experiment::Lasso => {
            let p = &cfg.lasso;
            let d =
                sample_lasso_limits(LASSO_C11, p.lambda0, p.sigma, &cfg.limit_stream(1), draws)?;
            out.push((
                "alpha1".into(),
                LimitLaw::LassoNormal {
                    c11: LASSO_C11,
                    lambda0: p.lambda0,
                    sigma: p.sigma,
                },
                d,
            ));
        }
        Experiment::Shorth => {
            let pop = shorth_population(ShorthDensity::StandardNormal);
            let ch = ChernoffConfig::with_defaults(pop.c1, pop.c2, draws);
            let d = sample_chernoff_argmax(&ch, &cfg.limit_stream(1))?;
            out.push((
                "m".into(),
                LimitLaw::Chernoff {
                    c1: pop.c1,
                    c2: pop.c2,
                    horizon: ch.horizon,
                    step: ch.step,
                },
                d.draws,
            ));
            for (tag, var) in [
                (2, SHORTH_Z_VARIANCE_STATED),
                (3, SHORTH_Z_VARIANCE_BINOMIAL),
            ] {
                let mut rng = cfg.limit_stream(tag).rng();
                let sd = var.sqrt() / pop.c1;
                let d: Vec<f64> = (0..draws)
                    .map(|_| sd * rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal))
                    .collect();
                out.push((
                    "r".into(),
                    LimitLaw::ShorthRadius {
                        c1: pop.c1,
                        z_variance: var,
                    },
                    d,
                ));
            }
        }
        Experiment::Kmeans => {
            let inputs = estimate_kmeans_cov(opts.kmeans_cov_samples, &cfg.limit_stream(1))?;
            let lim = sample_kmeans_limit(&inputs, &cfg.limit_stream(2), draws)?;
            for (index, c) in COMPONENT_LABELS.iter().enumerate() {
                let d = lim
                    .iter()
                    .map(|l| {
                        if index < 2 {
                            l.s[index]
                        } else {
                            l.t[index - 2]
                        }
                    })
                    .collect();
                out.push((
                    c.to_string(),
                    LimitLaw::KmeansMarginal {
                        index,
                        cov_samples: opts.kmeans_cov_samples,
                    },
                    d,
                ));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEntry {
    pub component: String,
    /// Predicted slope `−τ` as a fraction, when the component has one.
    pub theoretical_slope: Option<String>,
    pub estimate: Option<RateEstimate>,
    /// Why no estimate was produced.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroFractionEntry {
    pub component: String,
    pub n: usize,
    pub fraction: f64,
    pub std_error: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitFraction {
    pub n: usize,
    /// Fraction of replicates whose global minimizer is the Cv configuration.
    pub cv_fraction: f64,
    pub std_error: f64,
    pub ties: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsEntry {
    pub component: String,
    pub n: usize,
    /// Rescaling exponent `τ`, applied as `n^τ · error`.
    pub rate: String,
    pub reference: LimitLaw,
    pub statistic: f64,
    pub sample_size: usize,
    pub reference_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub error_summary: ErrorSummary,
    pub rates: Vec<RateEntry>,
    pub zero_fractions: Vec<ZeroFractionEntry>,
    pub split_fractions: Vec<SplitFraction>,
    pub ks: Vec<KsEntry>,
}

fn rate_entries(
    cfg: &LadderConfig,
    records: &[LadderRecord],
    how: ErrorSummary,
) -> Result<Vec<RateEntry>> {
    let top = *cfg.n_values.last().expect("validated");
    let mut out = Vec::new();
    for &c in cfg.experiment.components() {
        if c == SPLIT_COMPONENT {
            continue;
        }
        let tau = theoretical_rate(cfg.experiment, c)?;
        let mut entry = RateEntry {
            component: c.to_string(),
            theoretical_slope: tau.map(|t| fraction_string(&-t)),
            estimate: None,
            note: None,
        };
        let collapse_candidate = cfg.experiment == Experiment::Lasso && c == "alpha2";
        if collapse_candidate {
            let z = zero_fraction(records.iter().filter(|r| r.n == top), c)?;
            if z.fraction > COLLAPSE_FRACTION {
                entry.note = Some("collapsed to 0".into());
                out.push(entry);
                continue;
            }
        }
        match fit_rate(records, c, how, collapse_candidate) {
            Ok(est) => entry.estimate = Some(est),
            Err(e) => entry.note = Some(e.to_string()),
        }
        out.push(entry);
    }
    Ok(out)
}

/// Reference draws behind each KS entry, as `(component, law, draws)`.
pub type LimitReferences = Vec<(String, LimitLaw, Vec<f64>)>;

/// Builds the summary of a finished ladder.
pub fn summarize(
    cfg: &LadderConfig,
    records: &[LadderRecord],
    opts: &SummaryOptions,
) -> Result<Summary> {
    summarize_with_references(cfg, records, opts).map(|(s, _)| s)
}

/// [`summarize`], also returning the limit-law draws used for the KS statistics.
pub fn summarize_with_references(
    cfg: &LadderConfig,
    records: &[LadderRecord],
    opts: &SummaryOptions,
) -> Result<(Summary, LimitReferences)> {
    cfg.validate()?;
    let rates = rate_entries(cfg, records, opts.error_summary)?;

    let mut zero_fractions = Vec::new();
    if cfg.experiment == Experiment::Lasso {
        for c in ["alpha1", "alpha2"] {
            for &n in &cfg.n_values {
                let z = zero_fraction(records.iter().filter(|r| r.n == n), c)?;
                zero_fractions.push(ZeroFractionEntry {
                    component: c.into(),
                    n,
                    fraction: z.fraction,
                    std_error: z.std_error,
                    count: z.count,
                });
            }
        }
    }

    let mut split_fractions = Vec::new();
    if cfg.experiment == Experiment::Kmeans {
        for &n in &cfg.n_values {
            let split: Vec<_> = records
                .iter()
                .filter(|r| r.n == n && r.component == SPLIT_COMPONENT && !r.failed())
                .collect();
            let count = split.len();
            let cv = split
                .iter()
                .filter(|r| r.choice == Some(KmeansInit::Cv))
                .count();
            let p = cv as f64 / count.max(1) as f64;
            split_fractions.push(SplitFraction {
                n,
                cv_fraction: p,
                std_error: (p * (1.0 - p) / count.max(1) as f64).sqrt(),
                ties: split.iter().filter(|r| r.tie_flag).count(),
                count,
            });
        }
    }

    let ks_n = opts
        .ks_n
        .unwrap_or(*cfg.n_values.last().expect("validated"));
    if !cfg.n_values.contains(&ks_n) {
        return Err(Error::InvalidParameter(format!(
            "KS sample size {ks_n} is not on the ladder"
        )));
    }
    let draws = opts.limit_draws.unwrap_or(cfg.replicates);
    let mut ks = Vec::new();
    let references = limit_reference(cfg, draws, opts)?;
    for (component, law, reference) in &references {
        let tau =
            theoretical_rate(cfg.experiment, component)?.expect("limit components have rates");
        let sample = rescaled_errors(records, component, ks_n, tau);
        ks.push(KsEntry {
            statistic: ks_two_sample(&sample, reference)?,
            component: component.clone(),
            n: ks_n,
            rate: fraction_string(&tau),
            reference: law.clone(),
            sample_size: sample.len(),
            reference_size: reference.len(),
        });
    }

    let summary = Summary {
        experiment: cfg.experiment,
        n_values: cfg.n_values.clone(),
        replicates: cfg.replicates,
        master_seed: cfg.master_seed,
        error_summary: opts.error_summary,
        rates,
        zero_fractions,
        split_fractions,
        ks,
    };
    Ok((summary, references))
}

/// Writes records with the header
/// `experiment,n,replicate,component,error,zero_flag,choice,tie_flag,diag_flags`.
pub fn write_records_csv<W: Write>(records: &[LadderRecord], mut out: W) -> Result<()> {
    writeln!(
        out,
        "experiment,n,replicate,component,error,zero_flag,choice,tie_flag,diag_flags"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:?},{},{},{},{}",
            r.experiment.name(),
            r.n,
            r.replicate,
            r.component,
            r.error,
            r.zero_flag as u8,
            r.choice.map(KmeansInit::name).unwrap_or(""),
            r.tie_flag as u8,
            r.diag_flags
        )?;
    }
    Ok(())
}

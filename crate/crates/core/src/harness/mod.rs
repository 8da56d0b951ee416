//! Monte Carlo ladders over sample sizes, rate fitting and distributional comparisons.

mod config;
mod stats;
mod summary;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::kmeans::{kmeans_global, KmeansInit, COMPONENT_LABELS};
use crate::estimators::lasso::{fit_bridge_lasso, generate_lasso_design, LassoConfig};
use crate::estimators::shorth::{fit_shorth, shorth_population, ShorthDensity, ShorthPopulation};
use crate::rng::{stream_index, SeedStream};

pub use config::parse_config;
pub use stats::{
    fit_rate, ks_two_sample, ladder_summaries, median, ols_line, zero_fraction, ErrorSummary,
    RateEstimate, ZeroFraction, MIN_LADDER_POINTS, MIN_REPLICATES,
};
pub use summary::{
    limit_reference, rescaled_errors, summarize, summarize_with_references, theoretical_rate,
    write_records_csv, KsEntry, LimitLaw, LimitReferences, RateEntry, SplitFraction, Summary,
    SummaryOptions, ZeroFractionEntry, COLLAPSE_FRACTION, SHORTH_Z_VARIANCE_BINOMIAL,
    SHORTH_Z_VARIANCE_STATED,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Lasso,
    Shorth,
    Kmeans,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lasso => "lasso",
            Self::Shorth => "shorth",
            Self::Kmeans => "kmeans",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Self::Lasso => 1,
            Self::Shorth => 2,
            Self::Kmeans => 3,
        }
    }

    /// Component labels in record order.
    pub fn components(self) -> &'static [&'static str] {
        match self {
            Self::Lasso => &LASSO_COMPONENTS,
            Self::Shorth => &SHORTH_COMPONENTS,
            Self::Kmeans => &KMEANS_COMPONENTS,
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lasso" => Ok(Self::Lasso),
            "shorth" => Ok(Self::Shorth),
            "kmeans" => Ok(Self::Kmeans),
            other => Err(Error::InvalidParameter(format!(
                "unknown experiment {other:?}"
            ))),
        }
    }
}

const LASSO_COMPONENTS: [&str; 2] = ["alpha1", "alpha2"];
const SHORTH_COMPONENTS: [&str; 2] = ["m", "r"];
/// The four local coordinates of the Cv solution followed by the global split record.
const KMEANS_COMPONENTS: [&str; 5] = [
    COMPONENT_LABELS[0],
    COMPONENT_LABELS[1],
    COMPONENT_LABELS[2],
    COMPONENT_LABELS[3],
    SPLIT_COMPONENT,
];
pub const SPLIT_COMPONENT: &str = "split";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoParams {
    pub beta_true: Vec<f64>,
    pub gamma: f64,
    pub lambda0: f64,
    pub sigma: f64,
}

impl Default for LassoParams {
    fn default() -> Self {
        Self {
            beta_true: vec![1.0, 0.0],
            gamma: 0.5,
            lambda0: 2.0,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    pub experiment: Experiment,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Used only by the Lasso experiment.
    #[serde(default)]
    pub lasso: LassoParams,
}

impl LadderConfig {
    pub fn new(
        experiment: Experiment,
        n_values: Vec<usize>,
        replicates: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            experiment,
            n_values,
            replicates,
            master_seed,
            lasso: LassoParams::default(),
        }
    }

    /// `n₀·2^j` for `j = 0..points`.
    pub fn geometric(n0: usize, points: usize) -> Vec<usize> {
        (0..points).map(|j| n0 << j).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::InvalidParameter("n_values is empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "n_values must be strictly increasing, got {:?}",
                self.n_values
            )));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(Error::InvalidParameter(format!(
                "replicates must be at least {MIN_REPLICATES}, got {}",
                self.replicates
            )));
        }
        let min_n = match self.experiment {
            Experiment::Lasso => 3,
            Experiment::Shorth => 2,
            Experiment::Kmeans => 2,
        };
        if self.n_values[0] < min_n {
            return Err(Error::InvalidParameter(format!(
                "n must be at least {min_n}"
            )));
        }
        if self.experiment == Experiment::Lasso {
            let p = &self.lasso;
            if p.beta_true.len() != 2 {
                return Err(Error::InvalidParameter(
                    "the Lasso experiment is two-dimensional".into(),
                ));
            }
            if !(p.gamma > 0.0 && p.gamma <= 1.0) || !(p.lambda0 >= 0.0) || !(p.sigma > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "invalid Lasso parameters {p:?}"
                )));
            }
        }
        Ok(())
    }

    /// Stream for replicate `r` at sample size `n`.
    pub fn replicate_stream(&self, n: usize, replicate: usize) -> SeedStream {
        SeedStream::new(
            self.master_seed,
            stream_index(&[self.experiment.tag(), n as u64, replicate as u64]),
        )
    }

    /// Stream for limit-law reference draws.
    pub fn limit_stream(&self, tag: u64) -> SeedStream {
        SeedStream::new(
            self.master_seed,
            stream_index(&[0, self.experiment.tag(), tag]),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRecord {
    pub experiment: Experiment,
    pub n: usize,
    pub replicate: usize,
    pub component: String,
    /// Estimate minus truth; NaN for a failed fit.
    pub error: f64,
    pub zero_flag: bool,
    /// Globally chosen k-means configuration, on split records only.
    pub choice: Option<KmeansInit>,
    pub tie_flag: bool,
    /// `|`-separated diagnostics, empty when clean.
    pub diag_flags: String,
}

pub const FAILED_FLAG: &str = "failed";

impl LadderRecord {
    pub fn failed(&self) -> bool {
        self.diag_flags.split('|').any(|f| f == FAILED_FLAG)
    }
}

fn record(
    cfg: &LadderConfig,
    n: usize,
    replicate: usize,
    component: &str,
    error: f64,
) -> LadderRecord {
    LadderRecord {
        experiment: cfg.experiment,
        n,
        replicate,
        component: component.to_string(),
        error,
        zero_flag: false,
        choice: None,
        tie_flag: false,
        diag_flags: String::new(),
    }
}

fn failed_records(
    cfg: &LadderConfig,
    n: usize,
    replicate: usize,
    err: &Error,
) -> Vec<LadderRecord> {
    cfg.experiment
        .components()
        .iter()
        .map(|c| LadderRecord {
            diag_flags: format!(
                "{FAILED_FLAG}|{}",
                err.to_string().replace([',', '\n', '|'], ";")
            ),
            ..record(cfg, n, replicate, c, f64::NAN)
        })
        .collect()
}

fn run_lasso(cfg: &LadderConfig, n: usize, replicate: usize) -> Result<Vec<LadderRecord>> {
    let p = &cfg.lasso;
    let stream = cfg.replicate_stream(n, replicate);
    let design = generate_lasso_design(n, 2, &stream.child(&[1]))?;
    let lc = LassoConfig::new(p.beta_true.clone(), p.gamma, p.lambda0, p.sigma, design)?;
    let y = lc.simulate_responses(&mut stream.child(&[2]).rng());
    let fit = fit_bridge_lasso(&y, &lc)?;
    let diag = if fit.widenings > 0 {
        "box_widened".to_string()
    } else {
        String::new()
    };
    Ok(LASSO_COMPONENTS
        .iter()
        .enumerate()
        .map(|(j, c)| LadderRecord {
            zero_flag: fit.zero_flags[j],
            diag_flags: diag.clone(),
            ..record(cfg, n, replicate, c, fit.alpha_hat[j] - p.beta_true[j])
        })
        .collect())
}

fn run_shorth(
    cfg: &LadderConfig,
    pop: &ShorthPopulation,
    n: usize,
    replicate: usize,
) -> Result<Vec<LadderRecord>> {
    let mut rng = cfg.replicate_stream(n, replicate).rng();
    let sample: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let fit = fit_shorth(&sample)?;
    Ok(vec![
        record(cfg, n, replicate, SHORTH_COMPONENTS[0], fit.m - pop.mu),
        record(cfg, n, replicate, SHORTH_COMPONENTS[1], fit.r - pop.rho),
    ])
}

fn run_kmeans(cfg: &LadderConfig, n: usize, replicate: usize) -> Result<Vec<LadderRecord>> {
    let stream = cfg.replicate_stream(n, replicate);
    let sample = crate::distributions::sample_two_line(n, &stream)?;
    let global = kmeans_global(&sample)?;
    let local = &global.fit_v;
    let mut flags = Vec::new();
    if local.reseeded {
        flags.push("reseeded");
    }
    if local.left_neighborhood {
        flags.push("left_neighborhood");
    }
    let diag = flags.join("|");
    let mut out: Vec<LadderRecord> = COMPONENT_LABELS
        .iter()
        .zip(local.coords.as_array())
        .map(|(c, e)| LadderRecord {
            diag_flags: diag.clone(),
            ..record(cfg, n, replicate, c, e)
        })
        .collect();
    out.push(LadderRecord {
        choice: Some(global.choice),
        tie_flag: global.tie,
        ..record(
            cfg,
            n,
            replicate,
            SPLIT_COMPONENT,
            global.fit_v.w_n - global.fit_h.w_n,
        )
    });
    Ok(out)
}

/// Runs every `(n, replicate)` of the ladder on the current rayon pool and returns
/// the records sorted by `n`, replicate and component order.
pub fn run_ladder(cfg: &LadderConfig) -> Result<Vec<LadderRecord>> {
    cfg.validate()?;
    let pop = shorth_population(ShorthDensity::StandardNormal);
    let tasks: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .collect();
    let per_task: Vec<Vec<LadderRecord>> = tasks
        .par_iter()
        .map(|&(n, r)| {
            let res = match cfg.experiment {
                Experiment::Lasso => run_lasso(cfg, n, r),
                Experiment::Shorth => run_shorth(cfg, &pop, n, r),
                Experiment::Kmeans => run_kmeans(cfg, n, r),
            };
            res.unwrap_or_else(|e| failed_records(cfg, n, r, &e))
        })
        .collect();
    let failed = per_task
        .iter()
        .filter(|recs| recs.iter().any(LadderRecord::failed))
        .count();
    if failed * 100 > tasks.len() {
        return Err(Error::TooManyFailures {
            failed,
            total: tasks.len(),
        });
    }
    // par_iter().collect() preserves task order, which is already canonical
    Ok(per_task.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_accounting_and_determinism() {
        for (exp, n) in [
            (Experiment::Lasso, 40),
            (Experiment::Shorth, 30),
            (Experiment::Kmeans, 60),
        ] {
            let cfg = LadderConfig::new(exp, vec![n, 2 * n], 50, 11);
            let a = run_ladder(&cfg).unwrap();
            assert_eq!(a.len(), 2 * 50 * exp.components().len());
            let b = run_ladder(&cfg).unwrap();
            assert_eq!(format!("{a:?}"), format!("{b:?}"));
            let mut sorted = a.clone();
            sorted.sort_by_key(|r| (r.n, r.replicate));
            assert_eq!(sorted, a);
        }
    }

    #[test]
    fn thread_count_does_not_change_records() {
        let cfg = LadderConfig::new(Experiment::Kmeans, vec![50, 100], 50, 3);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| run_ladder(&cfg)).unwrap();
        let b = four.install(|| run_ladder(&cfg)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn replicate_streams_are_reconstructible() {
        let cfg = LadderConfig::new(Experiment::Shorth, vec![100, 200], 50, 5);
        let recs = run_ladder(&cfg).unwrap();
        let pop = shorth_population(ShorthDensity::StandardNormal);
        let again = run_shorth(&cfg, &pop, 200, 17).unwrap();
        let from_ladder: Vec<_> = recs
            .iter()
            .filter(|r| r.n == 200 && r.replicate == 17)
            .cloned()
            .collect();
        assert_eq!(again, from_ladder);
    }

    #[test]
    fn unpenalized_lasso_rarely_hits_zero() {
        let mut cfg = LadderConfig::new(Experiment::Lasso, vec![250, 500, 1000, 2000], 100, 9);
        cfg.lasso.lambda0 = 0.0;
        let recs = run_ladder(&cfg).unwrap();
        for n in &cfg.n_values {
            let z = zero_fraction(recs.iter().filter(|r| r.n == *n), "alpha2").unwrap();
            assert!(z.fraction < 0.05, "n = {n}: {z:?}");
        }
    }

    #[test]
    fn invalid_ladders_are_rejected() {
        assert!(run_ladder(&LadderConfig::new(
            Experiment::Shorth,
            vec![200, 100],
            50,
            1
        ))
        .is_err());
        assert!(run_ladder(&LadderConfig::new(Experiment::Shorth, vec![100], 49, 1)).is_err());
        assert!(run_ladder(&LadderConfig::new(Experiment::Shorth, vec![], 50, 1)).is_err());
        let mut cfg = LadderConfig::new(Experiment::Lasso, vec![100], 50, 1);
        cfg.lasso.sigma = 0.0;
        assert!(run_ladder(&cfg).is_err());
    }

    #[test]
    fn geometric_ladder() {
        assert_eq!(
            LadderConfig::geometric(1000, 4),
            vec![1000, 2000, 4000, 8000]
        );
    }
}

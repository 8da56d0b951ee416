mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixrates::estimators::shorth::{shorth_population, ShorthDensity};
use mixrates::harness::{
    parse_config, run_ladder, summarize_with_references, ErrorSummary, Experiment, LadderConfig,
    SummaryOptions,
};
use mixrates::limits::{
    estimate_kmeans_cov, sample_chernoff_argmax, sample_kmeans_limit, sample_lasso_limits,
    ChernoffConfig,
};
use mixrates::rates::{compute_theorem3_rates, parse_exponent, parse_term, RateSpec};
use mixrates::verify::{run_verify, Tier, DEFAULT_SEED};
use mixrates::{Error, SeedStream};

const EXIT_CODES: &str = "\
Exit codes:
  0  success (for verify: every check passed)
  2  unknown flag or malformed command line
  3  invalid configuration or parameter
  4  verify ran and at least one check failed
  5  runtime failure (I/O, too many failed replicates, limit sampler failure)";

const EXIT_USAGE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "mixrates", version, about = "Rate calculus, Monte Carlo ladders and limit-law samplers for mixed-rate M-estimators", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the exact rates and regime of a criterion exponent profile as JSON.
    Rates(RatesArgs),
    /// Run a sample-size ladder and write records.csv, summary.json, manifest.json and plotdata/.
    Simulate(SimulateArgs),
    /// Draw from a limit law and print the draws as CSV.
    Limit(LimitArgs),
    /// Run the acceptance checks.
    #[command(after_help = EXIT_CODES)]
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct RatesArgs {
    /// Exponent of the slow block, e.g. 4 or 7/2.
    #[arg(long)]
    alpha: String,
    /// Exponent of the fast block.
    #[arg(long)]
    beta: String,
    /// Cross term `gamma:eta`, bounding |a|^gamma |b|^eta; repeatable.
    #[arg(long = "term")]
    terms: Vec<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Config file of `key = value` lines; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lasso, shorth or kmeans.
    #[arg(long)]
    experiment: Option<String>,
    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// Replicates per sample size (at least 50).
    #[arg(long)]
    replicates: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Lasso true coefficients, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta_true: Option<Vec<f64>>,
    /// Lasso penalty exponent.
    #[arg(long)]
    gamma: Option<f64>,
    /// Lasso penalty level, lambda_n = lambda0 * sqrt(n).
    #[arg(long)]
    lambda0: Option<f64>,
    /// Lasso noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Error summary for rate fits: median-abs or rmse.
    #[arg(long, default_value = "median-abs")]
    error_summary: String,
    /// Sample size of the KS comparisons (default: top of the ladder).
    #[arg(long)]
    ks_n: Option<usize>,
    /// Limit-law draws per KS reference (default: replicates).
    #[arg(long)]
    limit_draws: Option<usize>,
    /// Monte Carlo size of the k-means score covariance.
    #[arg(long, default_value_t = 1_000_000)]
    cov_samples: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct LimitArgs {
    #[command(subcommand)]
    law: LimitLaw,
    #[arg(long, default_value_t = 1000, global = true)]
    draws: usize,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum LimitLaw {
    /// argmax over t of c2 t^2 + sqrt(c1) B(t), B a two-sided Brownian motion.
    ///
    /// The shorth center limit. The drift is sometimes written c2 t; this sampler
    /// uses the quadratic drift c2 t^2 that the expansion of the criterion
    /// produces (a linear drift has no interior maximum for c2 < 0).
    /// Defaults for c1, c2 are the standard-normal shorth constants 2 phi(rho)
    /// and -rho phi(rho).
    Chernoff {
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        c2: Option<f64>,
        /// Half-width T of the grid (default 4 (sqrt(c1)/|c2|)^(2/3)).
        #[arg(long)]
        horizon: Option<f64>,
        /// Grid step h (default T/4000); T/h must be an integer.
        #[arg(long)]
        step: Option<f64>,
    },
    /// N(-lambda0/(4 C11), sigma^2/C11), the limit of sqrt(n)(alpha1_hat - 1).
    Lasso {
        #[arg(long, default_value_t = 1.0 / 3.0)]
        c11: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// (s*, t*) of the two-line 2-means problem.
    Kmeans {
        #[arg(long, default_value_t = 1_000_000)]
        cov_samples: usize,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Reduced replicates and sample sizes (about a minute).
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// Acceptance-size runs; the default.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write manifest.json and verify.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    VerifyFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidRateSpec(_)
        | Error::ParseFraction(_)
        | Error::InvalidParameter(_)
        | Error::Config { .. }
        | Error::IndefiniteCovariance(_) => EXIT_INVALID,
        _ => EXIT_RUNTIME,
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidParameter("--threads must be positive".into()).into()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_rates(args: &RatesArgs) -> Result<(), Failure> {
    let terms = args
        .terms
        .iter()
        .map(|t| parse_term(t))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = RateSpec::new(
        parse_exponent(&args.alpha)?,
        parse_exponent(&args.beta)?,
        terms,
    );
    let result = compute_theorem3_rates(&spec)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&result).expect("serializable")
    );
    Ok(())
}

fn resolve_config(args: &SimulateArgs) -> Result<LadderConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                line: 0,
                message: format!("{}: {e}", path.display()),
            })?;
            parse_config(&text)?
        }
        None => {
            let experiment: Experiment = args
                .experiment
                .as_deref()
                .ok_or_else(|| {
                    Error::InvalidParameter("--experiment or --config is required".into())
                })?
                .parse()?;
            let n_values = args.n_values.clone().ok_or_else(|| {
                Error::InvalidParameter("--n-values or --config is required".into())
            })?;
            LadderConfig::new(experiment, n_values, 200, 0)
        }
    };
    if let Some(e) = &args.experiment {
        cfg.experiment = e.parse()?;
    }
    if let Some(n) = &args.n_values {
        cfg.n_values = n.clone();
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(b) = &args.beta_true {
        cfg.lasso.beta_true = b.clone();
    }
    if let Some(g) = args.gamma {
        cfg.lasso.gamma = g;
    }
    if let Some(l) = args.lambda0 {
        cfg.lasso.lambda0 = l;
    }
    if let Some(s) = args.sigma {
        cfg.lasso.sigma = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let started = chrono::Utc::now();
    let cfg = resolve_config(args)?;
    let opts = SummaryOptions {
        error_summary: args.error_summary.parse::<ErrorSummary>()?,
        ks_n: args.ks_n,
        limit_draws: args.limit_draws,
        kmeans_cov_samples: args.cov_samples,
    };
    if let Some(n) = opts.ks_n {
        if !cfg.n_values.contains(&n) {
            return Err(Error::InvalidParameter(format!("--ks-n {n} is not on the ladder")).into());
        }
    }
    let (records, summary, references) = with_threads(args.threads, || -> Result<_, Error> {
        let records = run_ladder(&cfg)?;
        let (summary, references) = summarize_with_references(&cfg, &records, &opts)?;
        Ok((records, summary, references))
    })??;
    let mut files = output::write_simulation(
        &args.out_dir,
        &cfg,
        &records,
        &summary,
        &references,
        opts.error_summary,
    )?;
    let manifest = output::Manifest {
        tool: "mixrates",
        version: env!("CARGO_PKG_VERSION"),
        command: std::env::args().collect(),
        config: Some(&cfg),
        config_text: Some(cfg.to_config_text()),
        summary_options: Some(opts),
        master_seed: cfg.master_seed,
        threads: args.threads,
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        checks: Vec::new(),
        outputs: std::mem::take(&mut files),
    };
    output::write_manifest(&args.out_dir, &manifest)?;
    for r in &summary.rates {
        match &r.estimate {
            Some(e) => println!(
                "{}: slope {} (se {}), theory {}",
                r.component,
                output::sig6(e.slope),
                output::sig6(e.slope_se),
                r.theoretical_slope.as_deref().unwrap_or("none")
            ),
            None => println!(
                "{}: {}",
                r.component,
                r.note.as_deref().unwrap_or("no estimate")
            ),
        }
    }
    for k in &summary.ks {
        println!(
            "KS {} vs {} at n = {}: {}",
            k.component,
            k.reference.slug(),
            k.n,
            output::sig6(k.statistic)
        );
    }
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

fn cmd_limit(args: &LimitArgs) -> Result<(), Failure> {
    let stream = SeedStream::new(args.seed, 0);
    let (header, rows): (&str, Vec<Vec<f64>>) = match &args.law {
        LimitLaw::Chernoff {
            c1,
            c2,
            horizon,
            step,
        } => {
            let pop = shorth_population(ShorthDensity::StandardNormal);
            let mut cfg = ChernoffConfig::with_defaults(
                c1.unwrap_or(pop.c1),
                c2.unwrap_or(pop.c2),
                args.draws,
            );
            if let Some(t) = horizon {
                cfg.horizon = *t;
                cfg.step = t / 4000.0;
            }
            if let Some(h) = step {
                cfg.step = *h;
            }
            let d = sample_chernoff_argmax(&cfg, &stream)?;
            eprintln!("boundary fraction {}", output::sig6(d.boundary_fraction));
            ("t", d.draws.into_iter().map(|t| vec![t]).collect())
        }
        LimitLaw::Lasso {
            c11,
            lambda0,
            sigma,
        } => {
            let d = sample_lasso_limits(*c11, *lambda0, *sigma, &stream, args.draws)?;
            ("u", d.into_iter().map(|u| vec![u]).collect())
        }
        LimitLaw::Kmeans { cov_samples } => {
            let inputs = estimate_kmeans_cov(*cov_samples, &stream.child(&[1]))?;
            let d = sample_kmeans_limit(&inputs, &stream.child(&[2]), args.draws)?;
            (
                "delta_s,eps_d,delta_d,eps_s",
                d.into_iter()
                    .map(|l| vec![l.s[0], l.s[1], l.t[0], l.t[1]])
                    .collect(),
            )
        }
    };
    let text = output::csv_text(header, &rows);
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let started = chrono::Utc::now();
    let tier = if args.quick { Tier::Quick } else { Tier::Full };
    let report = with_threads(args.threads, || {
        run_verify(tier, args.seed, |o| println!("{o}"))
    })??;
    let passed = report.outcomes.iter().filter(|o| o.passed).count();
    println!("{passed} of {} checks passed", report.outcomes.len());
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        let outputs = vec![output::write_json(dir, "verify.json", &report)?];
        let manifest = output::Manifest {
            tool: "mixrates",
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            config: None,
            config_text: None,
            summary_options: None,
            master_seed: args.seed,
            threads: args.threads,
            started_at: started.to_rfc3339(),
            finished_at: chrono::Utc::now().to_rfc3339(),
            checks: report.outcomes.clone(),
            outputs,
        };
        output::write_manifest(dir, &manifest)?;
    }
    if report.all_passed {
        Ok(())
    } else {
        Err(Failure::VerifyFailed)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Rates(a) => cmd_rates(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Limit(a) => cmd_limit(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::VerifyFailed) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

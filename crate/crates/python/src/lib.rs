//! Python bindings: rate calculus, estimators, limit samplers and the ladder harness.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use mixrates::estimators::kmeans::{fit_kmeans2 as core_fit_kmeans2, KmeansInit};
use mixrates::estimators::lasso::{fit_bridge_lasso as core_fit_lasso, Design, LassoConfig};
use mixrates::estimators::shorth::{
    fit_shorth as core_fit_shorth, shorth_population as core_population, ShorthDensity,
};
use mixrates::harness::{
    self, Experiment, LadderConfig as CoreLadderConfig, LadderRecord as CoreRecord, SummaryOptions,
};
use mixrates::limits::{self, ChernoffConfig};
use mixrates::rates::{self, fraction_string, CrossTerm, Lemma1Spec, NoiseTerm, RateSpec};
use mixrates::{Error, SeedStream};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidRateSpec(_)
        | Error::ParseFraction(_)
        | Error::InvalidParameter(_)
        | Error::Config { .. }
        | Error::IndefiniteCovariance(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Exact rates of a criterion profile.
#[pyclass(name = "RateResult", frozen)]
struct PyRateResult {
    inner: rates::RateResult,
}

#[pymethods]
impl PyRateResult {
    /// `τ_a` as a fraction string.
    #[getter]
    fn tau_a(&self) -> String {
        fraction_string(&self.inner.tau_a)
    }

    #[getter]
    fn tau_b(&self) -> String {
        fraction_string(&self.inner.tau_b)
    }

    #[getter]
    fn lambda0(&self) -> String {
        fraction_string(&self.inner.lambda0)
    }

    #[getter]
    fn lambdas(&self) -> Vec<String> {
        self.inner.lambdas.iter().map(fraction_string).collect()
    }

    #[getter]
    fn active_terms(&self) -> Vec<usize> {
        self.inner.active_terms.clone()
    }

    #[getter]
    fn regime(&self) -> String {
        self.inner.regime.to_string()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "RateResult(tau_a={}, tau_b={}, regime={})",
            self.tau_a(),
            self.tau_b(),
            self.regime()
        )
    }
}

/// Rates for `‖a‖^α + ‖b‖^β` plus cross terms given as `"gamma:eta"` strings.
#[pyfunction]
#[pyo3(signature = (alpha, beta, terms = Vec::new()))]
fn compute_rates(alpha: &str, beta: &str, terms: Vec<String>) -> PyResult<PyRateResult> {
    let terms = terms
        .iter()
        .map(|t| rates::parse_term(t))
        .collect::<Result<Vec<CrossTerm>, _>>()
        .map_err(py_err)?;
    let spec = RateSpec::new(
        rates::parse_exponent(alpha).map_err(py_err)?,
        rates::parse_exponent(beta).map_err(py_err)?,
        terms,
    );
    rates::compute_theorem3_rates(&spec)
        .map(|inner| PyRateResult { inner })
        .map_err(py_err)
}

/// `(τ_a, b_rate)` for a criterion with noise terms given as `(gamma, eta)` strings.
#[pyfunction]
fn lemma1_rate(
    alpha: &str,
    beta: &str,
    noise_terms: Vec<(String, String)>,
) -> PyResult<(String, String)> {
    let noise_terms = noise_terms
        .iter()
        .map(|(g, e)| {
            Ok(NoiseTerm {
                gamma: rates::parse_exponent(g)?,
                eta: rates::parse_exponent(e)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(py_err)?;
    let spec = Lemma1Spec {
        alpha: rates::parse_exponent(alpha).map_err(py_err)?,
        beta: rates::parse_exponent(beta).map_err(py_err)?,
        noise_terms,
    };
    let (a, b) = rates::compute_lemma1_rate(&spec).map_err(py_err)?;
    Ok((fraction_string(&a), fraction_string(&b)))
}

/// Shortest half-sample interval: `(center, half_length)`.
#[pyfunction]
fn fit_shorth(sample: Vec<f64>) -> PyResult<(f64, f64)> {
    core_fit_shorth(&sample).map(|f| (f.m, f.r)).map_err(py_err)
}

/// `{mu, rho, c1, c2}` of the standard normal shorth.
#[pyfunction]
fn shorth_population<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &core_population(ShorthDensity::StandardNormal))
}

/// Bridge-penalized least squares on a centered two-column design.
#[pyfunction]
#[pyo3(signature = (x, y, gamma = 0.5, lambda0 = 2.0))]
fn fit_bridge_lasso<'py>(
    py: Python<'py>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    gamma: f64,
    lambda0: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let design = Design::from_rows(&x).map_err(py_err)?;
    let d = design.d();
    let cfg = LassoConfig::new(vec![0.0; d], gamma, lambda0, 1.0, design).map_err(py_err)?;
    let fit = core_fit_lasso(&y, &cfg).map_err(py_err)?;
    to_py(py, &fit)
}

/// Local 2-means from the `"cv"` or `"ch"` configuration.
#[pyfunction]
#[pyo3(signature = (points, init = "cv"))]
fn fit_kmeans2<'py>(
    py: Python<'py>,
    points: Vec<(f64, f64)>,
    init: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let init = match init {
        "cv" => KmeansInit::Cv,
        "ch" => KmeansInit::Ch,
        other => {
            return Err(PyValueError::new_err(format!(
                "init must be 'cv' or 'ch', got {other:?}"
            )))
        }
    };
    let pts: Vec<[f64; 2]> = points.into_iter().map(|(a, b)| [a, b]).collect();
    let fit = core_fit_kmeans2(&pts, init).map_err(py_err)?;
    to_py(py, &fit)
}

/// Draws of `argmax_t c2 t² + √c1 B(t)`.
#[pyfunction]
#[pyo3(signature = (c1, c2, draws, seed = 0, horizon = None, step = None))]
fn sample_chernoff(
    c1: f64,
    c2: f64,
    draws: usize,
    seed: u64,
    horizon: Option<f64>,
    step: Option<f64>,
) -> PyResult<Vec<f64>> {
    let mut cfg = ChernoffConfig::with_defaults(c1, c2, draws);
    if let Some(t) = horizon {
        cfg.horizon = t;
        cfg.step = t / 4000.0;
    }
    if let Some(h) = step {
        cfg.step = h;
    }
    limits::sample_chernoff_argmax(&cfg, &SeedStream::new(seed, 0))
        .map(|d| d.draws)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (draws, c11 = 1.0 / 3.0, lambda0 = 2.0, sigma = 1.0, seed = 0))]
fn sample_lasso_limits(
    draws: usize,
    c11: f64,
    lambda0: f64,
    sigma: f64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    limits::sample_lasso_limits(c11, lambda0, sigma, &SeedStream::new(seed, 0), draws)
        .map_err(py_err)
}

/// Rows `(δ_s*, ε_d*, δ_d*, ε_s*)` of the k-means limit.
#[pyfunction]
#[pyo3(signature = (draws, seed = 0, cov_samples = 1_000_000))]
fn sample_kmeans_limit(
    draws: usize,
    seed: u64,
    cov_samples: usize,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let stream = SeedStream::new(seed, 0);
    let inputs = limits::estimate_kmeans_cov(cov_samples, &stream.child(&[1])).map_err(py_err)?;
    let d = limits::sample_kmeans_limit(&inputs, &stream.child(&[2]), draws).map_err(py_err)?;
    Ok(d.into_iter()
        .map(|l| (l.s[0], l.s[1], l.t[0], l.t[1]))
        .collect())
}

#[pyfunction]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    harness::ks_two_sample(&a, &b).map_err(py_err)
}

/// One `(n, replicate, component)` error record.
#[pyclass(name = "LadderRecord", frozen, get_all)]
struct PyLadderRecord {
    experiment: String,
    n: usize,
    replicate: usize,
    component: String,
    error: f64,
    zero_flag: bool,
    choice: Option<String>,
    tie_flag: bool,
    diag_flags: String,
}

impl From<&CoreRecord> for PyLadderRecord {
    fn from(r: &CoreRecord) -> Self {
        Self {
            experiment: r.experiment.name().into(),
            n: r.n,
            replicate: r.replicate,
            component: r.component.clone(),
            error: r.error,
            zero_flag: r.zero_flag,
            choice: r.choice.map(|c| c.name().to_string()),
            tie_flag: r.tie_flag,
            diag_flags: r.diag_flags.clone(),
        }
    }
}

#[pymethods]
impl PyLadderRecord {
    fn __repr__(&self) -> String {
        format!(
            "LadderRecord(n={}, replicate={}, component={:?}, error={})",
            self.n, self.replicate, self.component, self.error
        )
    }
}

/// A sample-size ladder for one experiment.
#[pyclass(name = "LadderConfig")]
struct PyLadderConfig {
    inner: CoreLadderConfig,
    records: Vec<CoreRecord>,
}

#[pymethods]
impl PyLadderConfig {
    #[new]
    #[pyo3(signature = (experiment, n_values, replicates = 200, seed = 0, lambda0 = 2.0, gamma = 0.5, sigma = 1.0))]
    fn new(
        experiment: &str,
        n_values: Vec<usize>,
        replicates: usize,
        seed: u64,
        lambda0: f64,
        gamma: f64,
        sigma: f64,
    ) -> PyResult<Self> {
        let exp: Experiment = experiment.parse().map_err(py_err)?;
        let mut inner = CoreLadderConfig::new(exp, n_values, replicates, seed);
        inner.lasso.lambda0 = lambda0;
        inner.lasso.gamma = gamma;
        inner.lasso.sigma = sigma;
        inner.validate().map_err(py_err)?;
        Ok(Self {
            inner,
            records: Vec::new(),
        })
    }

    /// Parses the `key = value` config format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: harness::parse_config(text).map_err(py_err)?,
            records: Vec::new(),
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_config_text()
    }

    #[getter]
    fn experiment(&self) -> &'static str {
        self.inner.experiment.name()
    }

    #[getter]
    fn n_values(&self) -> Vec<usize> {
        self.inner.n_values.clone()
    }

    #[getter]
    fn replicates(&self) -> usize {
        self.inner.replicates
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.master_seed
    }

    /// Runs the ladder, keeps the records for `summarize`, and returns them.
    fn run(&mut self, py: Python<'_>) -> PyResult<Vec<PyLadderRecord>> {
        let cfg = self.inner.clone();
        self.records = py
            .detach(move || harness::run_ladder(&cfg))
            .map_err(py_err)?;
        Ok(self.records.iter().map(PyLadderRecord::from).collect())
    }

    /// Summary of the last run as a dict: fitted rates, zero and split fractions, KS.
    #[pyo3(signature = (limit_draws = None, error_summary = "median-abs", cov_samples = 1_000_000))]
    fn summarize<'py>(
        &self,
        py: Python<'py>,
        limit_draws: Option<usize>,
        error_summary: &str,
        cov_samples: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        if self.records.is_empty() {
            return Err(PyRuntimeError::new_err("call run() first"));
        }
        let opts = SummaryOptions {
            error_summary: error_summary.parse().map_err(py_err)?,
            limit_draws,
            kmeans_cov_samples: cov_samples,
            ..Default::default()
        };
        let s = py
            .detach(|| harness::summarize(&self.inner, &self.records, &opts))
            .map_err(py_err)?;
        to_py(py, &s)
    }

    /// Writes the records of the last run as CSV.
    fn records_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        harness::write_records_csv(&self.records, &mut buf).map_err(py_err)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

#[pymodule(name = "mixrates")]
fn mixrates_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRateResult>()?;
    m.add_class::<PyLadderConfig>()?;
    m.add_class::<PyLadderRecord>()?;
    m.add_function(wrap_pyfunction!(compute_rates, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_rate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_shorth, m)?)?;
    m.add_function(wrap_pyfunction!(shorth_population, m)?)?;
    m.add_function(wrap_pyfunction!(fit_bridge_lasso, m)?)?;
    m.add_function(wrap_pyfunction!(fit_kmeans2, m)?)?;
    m.add_function(wrap_pyfunction!(sample_chernoff, m)?)?;
    m.add_function(wrap_pyfunction!(sample_lasso_limits, m)?)?;
    m.add_function(wrap_pyfunction!(sample_kmeans_limit, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    Ok(())
}

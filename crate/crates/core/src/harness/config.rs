//! Flat `key = value` ladder configuration files.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::harness::{Experiment, LadderConfig};

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn list<T: std::str::FromStr>(line: usize, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| bad(line, format!("cannot parse list entry {v:?}")))
        })
        .collect()
}

fn scalar<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| bad(line, format!("cannot parse {key} = {value:?}")))
}

/// Parses a ladder configuration.
///
/// Recognized keys: `experiment`, `n_values` (comma list), `replicates`, `seed`,
/// `beta_true` (comma list), `gamma`, `lambda0`, `sigma`. Blank lines and text
/// after `#` are ignored. Missing `replicates` and `seed` default to 200 and 0.
pub fn parse_config(text: &str) -> Result<LadderConfig> {
    let mut experiment = None;
    let mut n_values = None;
    let mut cfg = LadderConfig::new(Experiment::Shorth, Vec::new(), 200, 0);
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| bad(line, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(bad(line, format!("duplicate key {key}")));
        }
        match key {
            "experiment" => {
                experiment = Some(
                    value
                        .parse::<Experiment>()
                        .map_err(|e| bad(line, e.to_string()))?,
                )
            }
            "n_values" => n_values = Some(list::<usize>(line, value)?),
            "replicates" => cfg.replicates = scalar(line, key, value)?,
            "seed" => cfg.master_seed = scalar(line, key, value)?,
            "beta_true" => cfg.lasso.beta_true = list::<f64>(line, value)?,
            "gamma" => cfg.lasso.gamma = scalar(line, key, value)?,
            "lambda0" => cfg.lasso.lambda0 = scalar(line, key, value)?,
            "sigma" => cfg.lasso.sigma = scalar(line, key, value)?,
            other => return Err(bad(line, format!("unknown key {other}"))),
        }
    }
    cfg.experiment = experiment.ok_or_else(|| bad(0, "missing key experiment"))?;
    cfg.n_values = n_values.ok_or_else(|| bad(0, "missing key n_values"))?;
    cfg.validate().map_err(|e| bad(0, e.to_string()))?;
    Ok(cfg)
}

impl LadderConfig {
    /// Renders the configuration in the format read by [`parse_config`].
    pub fn to_config_text(&self) -> String {
        let join = |v: &[String]| v.join(", ");
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment.name());
        let _ = writeln!(
            s,
            "n_values = {}",
            join(
                &self
                    .n_values
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
            )
        );
        let _ = writeln!(s, "replicates = {}", self.replicates);
        let _ = writeln!(s, "seed = {}", self.master_seed);
        if self.experiment == Experiment::Lasso {
            let p = &self.lasso;
            let _ = writeln!(
                s,
                "beta_true = {}",
                join(
                    &p.beta_true
                        .iter()
                        .map(|b| format!("{b:?}"))
                        .collect::<Vec<_>>()
                )
            );
            let _ = writeln!(s, "gamma = {:?}", p.gamma);
            let _ = writeln!(s, "lambda0 = {:?}", p.lambda0);
            let _ = writeln!(s, "sigma = {:?}", p.sigma);
        }
        s
    }
}

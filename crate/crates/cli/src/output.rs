//! Files written by `simulate` and `verify`.

use std::fs;
use std::path::Path;

use mixrates::harness::{
    ladder_summaries, rescaled_errors, theoretical_rate, write_records_csv, ErrorSummary,
    LadderConfig, LadderRecord, LimitReferences, Summary, SummaryOptions, SPLIT_COMPONENT,
};
use mixrates::verify::CheckOutcome;
use mixrates::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use mixrates::verify::sig6;

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub config: Option<&'a LadderConfig>,
    /// The resolved configuration in config-file syntax.
    pub config_text: Option<String>,
    pub summary_options: Option<SummaryOptions>,
    pub master_seed: u64,
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    pub checks: Vec<CheckOutcome>,
    pub outputs: Vec<OutputFile>,
}

fn write_file(dir: &Path, rel: &str, bytes: &[u8]) -> Result<OutputFile> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes)?;
    Ok(OutputFile {
        path: rel.to_string(),
        sha256: format!("{:x}", Sha256::digest(bytes)),
        bytes: bytes.len(),
    })
}

/// Rounds every float in a JSON tree to six significant digits.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn write_json<T: Serialize>(dir: &Path, rel: &str, value: &T) -> Result<OutputFile> {
    let mut json = serde_json::to_value(value).expect("serializable");
    round_json(&mut json);
    let mut text = serde_json::to_string_pretty(&json).expect("serializable");
    text.push('\n');
    write_file(dir, rel, text.as_bytes())
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<OutputFile> {
    write_json(dir, "manifest.json", manifest)
}

/// CSV with full-precision floats; an empty field stands for a missing value.
pub fn csv_text(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|x| {
                if x.is_nan() {
                    String::new()
                } else {
                    format!("{x:?}")
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Sorted columns side by side, padded with missing values.
fn paired_columns(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<Vec<f64>> {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    (0..a.len().max(b.len()))
        .map(|i| {
            vec![
                a.get(i).copied().unwrap_or(f64::NAN),
                b.get(i).copied().unwrap_or(f64::NAN),
            ]
        })
        .collect()
}

pub fn write_simulation(
    dir: &Path,
    cfg: &LadderConfig,
    records: &[LadderRecord],
    summary: &Summary,
    references: &LimitReferences,
    how: ErrorSummary,
) -> Result<Vec<OutputFile>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut csv = Vec::new();
    write_records_csv(records, &mut csv)?;
    files.push(write_file(dir, "records.csv", &csv)?);
    files.push(write_json(dir, "summary.json", summary)?);

    for &c in cfg.experiment.components() {
        if c == SPLIT_COMPONENT {
            continue;
        }
        let rows: Vec<Vec<f64>> = ladder_summaries(records, c, how, false)
            .into_iter()
            .filter(|(_, count, s)| *count > 0 && *s > 0.0)
            .map(|(n, _, s)| vec![(n as f64).ln(), s.ln()])
            .collect();
        let text = csv_text("log_n,log_error_summary", &rows);
        files.push(write_file(
            dir,
            &format!("plotdata/rate_{c}.csv"),
            text.as_bytes(),
        )?);
    }
    for (entry, (component, law, draws)) in summary.ks.iter().zip(references) {
        let tau = theoretical_rate(cfg.experiment, component)?.expect("KS components have rates");
        let sample = rescaled_errors(records, component, entry.n, tau);
        let text = csv_text(
            "rescaled_error,limit_draw",
            &paired_columns(sample, draws.clone()),
        );
        files.push(write_file(
            dir,
            &format!("plotdata/ks_{component}_{}.csv", law.slug()),
            text.as_bytes(),
        )?);
    }
    Ok(files)
}

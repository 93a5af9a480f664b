//! Aggregating run directories into one CSV table.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::run::{RunSummary, METRICS_FILE, SUMMARY_FILE};
use crate::LabError;

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SummaryTable {
    pub rows: Vec<Aggregate>,
    pub included: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl SummaryTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,n,mean,stddev,min,max\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.metric, r.n, r.mean, r.stddev, r.min, r.max
            ));
        }
        out
    }
}

/// Loads a run's summary, refusing directories that are not complete.
pub fn load_complete(dir: &Path) -> Result<RunSummary, String> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|_| format!("{}: no {SUMMARY_FILE}", dir.display()))?;
    let summary: RunSummary =
        serde_json::from_str(&text).map_err(|e| format!("{}: unreadable summary: {e}", dir.display()))?;
    let metrics = dir.join(METRICS_FILE);
    let file = fs::File::open(&metrics).map_err(|_| format!("{}: no {METRICS_FILE}", dir.display()))?;
    let rows = BufReader::new(file).lines().count() as u64;
    if rows != summary.steps {
        return Err(format!(
            "{}: {METRICS_FILE} has {rows} rows, summary says {}",
            dir.display(),
            summary.steps
        ));
    }
    Ok(summary)
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, f64>) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                out.insert(prefix.to_string(), x);
            }
        }
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        _ => {}
    }
}

fn aggregate(metric: String, values: &[f64]) -> Aggregate {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stddev = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Aggregate {
        metric,
        n,
        mean,
        stddev,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Aggregates every numeric summary field across the complete directories.
/// Rows are sorted by metric name; `seed` is skipped.
pub fn summarize(dirs: &[PathBuf]) -> Result<SummaryTable, LabError> {
    let mut table = SummaryTable::default();
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for dir in dirs {
        match load_complete(dir) {
            Ok(summary) => {
                let v = serde_json::to_value(&summary).map_err(|e| LabError::Format(e.to_string()))?;
                let mut flat = BTreeMap::new();
                flatten("", &v, &mut flat);
                flat.remove("seed");
                for (k, x) in flat {
                    values.entry(k).or_default().push(x);
                }
                table.included.push(dir.clone());
            }
            Err(w) => table.warnings.push(format!("excluded {w}")),
        }
    }
    if table.included.is_empty() {
        return Err(LabError::NoRuns(table.warnings));
    }
    table.rows = values.into_iter().map(|(k, v)| aggregate(k, &v)).collect();
    Ok(table)
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentReport;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Top-level JSON result document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub format_version: u32,
    pub artifact_version: String,
    pub reports: Vec<ExperimentReport>,
}

const TABLE_HEADER: [&str; 15] = [
    "format_version",
    "dataset",
    "zeta",
    "metric",
    "method",
    "mean",
    "std",
    "runs",
    "repetitions",
    "seed",
    "epsilon_transduction",
    "epsilon_induction",
    "alpha",
    "max_rounds",
    "standardize",
];

/// Aggregates as CSV, one row per (report, metric, method).
pub fn flat_table(reports: &[ExperimentReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let out = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(TABLE_HEADER).map_err(out)?;
    for r in reports {
        for metric in ["ari", "nmi"] {
            for (method, summary) in [("oti", &r.inductive), ("transductive", &r.transductive)] {
                let (mean, std) = match summary {
                    Some(s) => {
                        let stat = if metric == "ari" { s.ari } else { s.nmi };
                        (stat.mean.to_string(), stat.std.to_string())
                    }
                    None => (String::new(), String::new()),
                };
                let c = &r.config;
                w.write_record([
                    FORMAT_VERSION.to_string(),
                    r.dataset.clone(),
                    r.zeta.to_string(),
                    metric.to_string(),
                    method.to_string(),
                    mean,
                    std,
                    r.runs.len().to_string(),
                    r.repetitions.to_string(),
                    c.seed.to_string(),
                    c.propagation.epsilon.to_string(),
                    c.induction.epsilon.to_string(),
                    c.propagation.alpha.to_string(),
                    c.propagation.max_rounds.to_string(),
                    c.standardize.to_string(),
                ])
                .map_err(out)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Output(e.to_string()))
}

/// Where [`emit_report`] puts the flat table for a given document path.
pub fn table_path_for(path: &Path) -> PathBuf {
    let table = path.with_extension("csv");
    if table == path {
        path.with_extension("table.csv")
    } else {
        table
    }
}

/// Writes the JSON document to `path` and the flat table next to it;
/// returns the table's path.
pub fn emit_report(reports: &[ExperimentReport], path: &Path) -> Result<PathBuf> {
    if reports.is_empty() {
        return Err(Error::Output("no reports to write".into()));
    }
    let doc = ResultDocument {
        format_version: FORMAT_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        reports: reports.to_vec(),
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| Error::Output(e.to_string()))?;
    let write = |p: &Path, body: &str| fs::write(p, body).map_err(|e| Error::Output(format!("{}: {e}", p.display())));
    write(path, &json)?;
    let table_path = table_path_for(path);
    write(&table_path, &flat_table(reports)?)?;
    Ok(table_path)
}

pub fn read_report(path: &Path) -> Result<ResultDocument> {
    let text = fs::read_to_string(path).map_err(|e| Error::Output(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Output(format!("{}: {e}", path.display())))
}

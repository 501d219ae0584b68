//! CSV, JSON and JSON-lines renderings of experiment results.

use std::io::Write;

use serde::Serialize;

use super::{ReportRow, RunRecord};
use crate::error::Result;

/// Column label of an accuracy level, e.g. `pr_at_1e-3`.
pub fn level_column(accuracy: f64) -> String {
    format!("pr_at_{accuracy:e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ReportRow], accuracy_levels: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "algorithm".to_string(),
        "function".into(),
        "pr_mean".into(),
        "pr_std".into(),
    ];
    header.extend(accuracy_levels.iter().map(|&a| level_column(a)));
    header.extend(["wilcoxon_mark".to_string(), "evals_mean".into()]);
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            row.algorithm.to_string(),
            row.function.clone(),
            fmt_opt(row.pr_mean),
            fmt_opt(row.pr_std),
        ];
        rec.extend(row.pr_at.iter().map(|p| fmt_opt(*p)));
        rec.push(row.wilcoxon_mark.clone());
        rec.push(format!("{:.6}", row.evals_mean));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRow<'a> {
    function: &'a str,
    pr_mean: Option<f64>,
    pr_std: Option<f64>,
    pr_at: Vec<JsonLevel>,
    wilcoxon_mark: &'a str,
    evals_mean: f64,
    failed_runs: usize,
}

#[derive(Serialize)]
struct JsonLevel {
    accuracy: f64,
    pr: Option<f64>,
}

#[derive(Serialize)]
struct JsonAlgorithm<'a> {
    algorithm: String,
    functions: Vec<JsonRow<'a>>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    algorithms: Vec<JsonAlgorithm<'a>>,
}

/// Report nested per algorithm, in row order.
pub fn write_json<W: Write>(rows: &[ReportRow], accuracy_levels: &[f64], mut out: W) -> Result<()> {
    let mut algorithms: Vec<JsonAlgorithm<'_>> = Vec::new();
    for row in rows {
        let name = row.algorithm.to_string();
        if algorithms.last().map(|a| a.algorithm != name).unwrap_or(true) {
            algorithms.push(JsonAlgorithm {
                algorithm: name,
                functions: Vec::new(),
            });
        }
        algorithms.last_mut().expect("just pushed").functions.push(JsonRow {
            function: &row.function,
            pr_mean: row.pr_mean,
            pr_std: row.pr_std,
            pr_at: accuracy_levels
                .iter()
                .zip(&row.pr_at)
                .map(|(&accuracy, &pr)| JsonLevel { accuracy, pr })
                .collect(),
            wilcoxon_mark: &row.wilcoxon_mark,
            evals_mean: row.evals_mean,
            failed_runs: row.failed_runs,
        });
    }
    serde_json::to_writer_pretty(&mut out, &JsonReport { algorithms })?;
    writeln!(out)?;
    Ok(())
}

/// One JSON object per run.
pub fn write_runs_jsonl<W: Write>(records: &[RunRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

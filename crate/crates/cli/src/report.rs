//! Record tables and per-figure plot data.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use propfair::audit::format_sig9;
use serde::Serialize;

use crate::experiment::ExperimentRecord;

pub const REPORT_SCHEMA: &str = "propfair-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => bail!("unknown report format {s:?} (expected csv or json)"),
        }
    }
}

const COLUMNS: [&str; 12] = [
    "dataset",
    "algorithm",
    "k",
    "seed",
    "scale",
    "rho",
    "kmeans",
    "kmedian",
    "wall_ms",
    "converged",
    "extra_centers",
    "open",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn record_row(r: &ExperimentRecord) -> Vec<String> {
    vec![
        r.dataset.clone(),
        r.algorithm.id().into(),
        r.k.to_string(),
        r.seed.to_string(),
        r.scale.to_string(),
        format_sig9(r.rho),
        format_sig9(r.kmeans),
        format_sig9(r.kmedian),
        r.wall_ms.to_string(),
        opt(r.converged),
        opt(r.extra_centers),
        r.open
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";"),
    ]
}

pub fn records_csv(records: &[ExperimentRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(record_row(r))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Plot data for one dataset and one measure: a row per `k`, a column per
/// algorithm, averaged over seeds.
pub fn figure_csv(
    records: &[ExperimentRecord],
    dataset: &str,
    measure: fn(&ExperimentRecord) -> f64,
) -> Result<String> {
    let mut algos: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<usize, BTreeMap<&str, (f64, usize)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.dataset == dataset) {
        let a = r.algorithm.id();
        if !algos.contains(&a) {
            algos.push(a);
        }
        let e = cells.entry(r.k).or_default().entry(a).or_insert((0.0, 0));
        e.0 += measure(r);
        e.1 += 1;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(std::iter::once("k").chain(algos.iter().copied()))?;
    for (k, row) in &cells {
        let vals = algos.iter().map(|a| {
            row.get(a)
                .map_or_else(String::new, |&(s, c)| format_sig9(s / c as f64))
        });
        w.write_record(std::iter::once(k.to_string()).chain(vals))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: &'static str,
    datasets: Vec<DatasetMeta<'a>>,
    records: &'a [ExperimentRecord],
}

#[derive(Serialize)]
struct DatasetMeta<'a> {
    id: &'a str,
    scale: String,
}

fn datasets(records: &[ExperimentRecord]) -> Vec<&ExperimentRecord> {
    let mut seen: Vec<&ExperimentRecord> = Vec::new();
    for r in records {
        if !seen.iter().any(|s| s.dataset == r.dataset) {
            seen.push(r);
        }
    }
    seen
}

pub fn report_json(records: &[ExperimentRecord]) -> String {
    let doc = JsonReport {
        schema: REPORT_SCHEMA,
        datasets: datasets(records)
            .into_iter()
            .map(|r| DatasetMeta {
                id: &r.dataset,
                scale: r.scale.to_string(),
            })
            .collect(),
        records,
    };
    serde_json::to_string_pretty(&doc).expect("report serializes")
}

/// Writes the report into `dir` and returns the files written. CSV output is
/// `records.csv` plus `<dataset>_rho.csv` and `<dataset>_kmeans.csv`; JSON
/// output is a single `report.json`.
pub fn emit_report(records: &[ExperimentRecord], format: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    let format: ReportFormat = format.parse()?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        files.push(p);
        Ok(())
    };
    match format {
        ReportFormat::Json => put("report.json".into(), report_json(records))?,
        ReportFormat::Csv => {
            put("records.csv".into(), records_csv(records)?)?;
            for r in datasets(records) {
                let id = &r.dataset;
                put(format!("{id}_rho.csv"), figure_csv(records, id, |r| r.rho)?)?;
                put(
                    format!("{id}_kmeans.csv"),
                    figure_csv(records, id, |r| r.kmeans)?,
                )?;
            }
        }
    }
    Ok(files)
}

//! CSV and manifest writers for a finished run.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::runner::RunResult;
use crate::auction::AuctionLedger;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::output::{fmt_real, write_atomic};

pub fn metrics_csv(result: &RunResult) -> String {
    let mut out = format!("scenario,seed,{}\n", MetricsReport::SCALAR_NAMES.join(","));
    for run in &result.runs {
        let values: Vec<String> = run.report.scalars().iter().map(|&v| fmt_real(v)).collect();
        let _ = writeln!(
            out,
            "{},{},{}",
            result.scenario.as_str(),
            run.seed,
            values.join(",")
        );
    }
    out
}

pub fn metrics_summary_csv(result: &RunResult) -> String {
    let mut out = String::from("scenario,metric,mean,std\n");
    for (i, name) in MetricsReport::SCALAR_NAMES.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            result.scenario.as_str(),
            name,
            fmt_real(result.mean[i]),
            fmt_real(result.std[i])
        );
    }
    out
}

pub fn provider_exposure_csv(result: &RunResult) -> String {
    let mut out = String::from("scenario,seed,provider_id,protected,exposure\n");
    for run in &result.runs {
        for (p, x) in run
            .market
            .providers()
            .iter()
            .zip(&run.report.provider_exposure)
        {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                result.scenario.as_str(),
                run.seed,
                p.id,
                p.protected as u8,
                fmt_real(*x)
            );
        }
    }
    out
}

pub fn slates_csv(result: &RunResult) -> String {
    let mut out = String::from("scenario,seed,consumer_id,rank,item_id,provider_id,base_score\n");
    for run in &result.runs {
        let items = run.market.items();
        for slate in &run.slates {
            for (r, e) in slate.entries.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    result.scenario.as_str(),
                    run.seed,
                    slate.consumer_id,
                    r + 1,
                    e.item_id,
                    items[e.item_id].provider_id,
                    fmt_real(e.base_score)
                );
            }
        }
    }
    out
}

/// Auction ledgers of all seeds, each row prefixed with its seed.
/// `None` when the scenario ran no auction.
pub fn auction_log_csv(result: &RunResult) -> Option<String> {
    if !result.scenario.uses_auction() {
        return None;
    }
    let mut out = format!("seed,{}\n", AuctionLedger::CSV_HEADER);
    for run in &result.runs {
        let Some(ledger) = &run.ledger else { continue };
        let mut rows = String::new();
        ledger.csv_rows(&mut rows);
        for line in rows.lines() {
            let _ = writeln!(out, "{},{line}", run.seed);
        }
    }
    Some(out)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
}

pub fn manifest_json(config: &ExperimentConfig) -> String {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("config serializes");
    text.push('\n');
    text
}

/// Every output file as `(name, contents)`, in write order.
pub fn render_outputs(
    result: &RunResult,
    config: &ExperimentConfig,
) -> Vec<(&'static str, String)> {
    let mut files = vec![
        ("metrics.csv", metrics_csv(result)),
        ("metrics_summary.csv", metrics_summary_csv(result)),
        ("provider_exposure.csv", provider_exposure_csv(result)),
        ("slates.csv", slates_csv(result)),
    ];
    if let Some(log) = auction_log_csv(result) {
        files.push(("auction_log.csv", log));
    }
    files.push(("run_manifest.json", manifest_json(config)));
    files
}

/// Writes all outputs into `dir`, each replaced atomically.
pub fn write_outputs(result: &RunResult, config: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, contents) in render_outputs(result, config) {
        write_atomic(&dir.join(name), &contents)?;
    }
    Ok(())
}

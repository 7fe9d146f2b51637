//! Executes a configuration and writes the CSV, JSON summary and plot.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiments::{cells, header, run_cell, schema, Cell, CellRow, Value};
use crate::plot;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub plot: bool,
    /// Worker threads; `None` uses `BANACH_THREADS` or rayon's default.
    pub threads: Option<usize>,
    pub seed_override: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub plot: Option<PathBuf>,
    pub rows: usize,
    pub passed: usize,
    pub evaluated: usize,
}

pub fn threads_from_env() -> Option<usize> {
    std::env::var("BANACH_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|n| *n > 0)
}

/// Full CSV record for a computed row.
fn record(cfg: &ExperimentConfig, hash: &str, seed: u64, row: &CellRow) -> Vec<String> {
    let mut out = vec![cfg.experiment.id().to_string(), row.body.clone(), Value::from(row.n).render()];
    out.extend(row.params.iter().chain(&row.metrics).map(Value::render));
    out.push(Value::from(row.pass).render());
    out.push(seed.to_string());
    out.push(VERSION.to_string());
    out.push(hash.to_string());
    out.push("ok".to_string());
    out
}

fn failure_record(cfg: &ExperimentConfig, hash: &str, cell: &Cell, msg: &str) -> Vec<String> {
    let s = schema(cfg.experiment);
    let body = cfg
        .body
        .as_ref()
        .and_then(|b| cell.n.map_or(Some(b.clone()), |n| b.with_dim(n).ok()))
        .map(|b| b.to_json())
        .unwrap_or_default();
    let mut out = vec![cfg.experiment.id().to_string(), body, Value::from(cell.n).render()];
    out.extend(std::iter::repeat_n(String::new(), s.params.len() + s.metrics.len()));
    out.push("false".to_string());
    out.push(cell.seed.to_string());
    out.push(VERSION.to_string());
    out.push(hash.to_string());
    out.push(format!("failed: {msg}"));
    out
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

/// Runs every cell and writes `<experiment>.csv` and `<experiment>.json`
/// (plus `<experiment>.svg` with `plot`) into the output directory.
pub fn run(cfg: &ExperimentConfig, warnings: &[String], opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed_override {
        cfg.seeds = vec![s];
    }
    let hash = cfg.hash();
    let dir = opts.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let id = cfg.experiment.id();
    let csv_path = dir.join(format!("{id}.csv"));
    let summary_path = dir.join(format!("{id}.json"));

    let grid = cells(&cfg);
    let threads = opts.threads.or_else(threads_from_env);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let results: Vec<(Result<Vec<CellRow>, banach_core::Error>, f64)> = pool.install(|| {
        grid.par_iter()
            .map(|cell| {
                let start = Instant::now();
                let r = run_cell(&cfg, cell);
                (r, start.elapsed().as_secs_f64() * 1e3)
            })
            .collect()
    });

    let mut w = csv_writer(&csv_path)?;
    w.write_record(header(cfg.experiment))?;
    let mut all_rows: Vec<(u64, CellRow)> = Vec::new();
    let mut wall_ms = Vec::with_capacity(results.len());
    let mut failure = None;
    for (cell, (res, ms)) in grid.iter().zip(results) {
        wall_ms.push(ms);
        match res {
            Ok(rows) => {
                for r in rows {
                    w.write_record(record(&cfg, &hash, cell.seed, &r))?;
                    all_rows.push((cell.seed, r));
                }
            }
            Err(e) => {
                w.write_record(failure_record(&cfg, &hash, cell, &e.to_string()))?;
                failure = Some(format!("cell n={:?} seed={}: {e}", cell.n, cell.seed));
                break;
            }
        }
    }
    w.flush()?;

    let evaluated = all_rows.iter().filter(|(_, r)| r.pass.is_some()).count();
    let passed = all_rows.iter().filter(|(_, r)| r.pass == Some(true)).count();
    let fitted = fitted_constants(&cfg, &all_rows);
    let summary = json!({
        "experiment": id,
        "config_hash": hash,
        "version": VERSION,
        "config": cfg,
        "seeds": cfg.seeds,
        "cells": grid.len(),
        "rows": all_rows.len(),
        "evaluated": evaluated,
        "passed": passed,
        "pass_rate": if evaluated > 0 { json!(passed as f64 / evaluated as f64) } else { json!(null) },
        "fitted_constants": fitted,
        "warnings": warnings,
        "wall_ms": wall_ms,
        "failure": failure,
    });
    fs::write(&summary_path, serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;

    let plot_path = if opts.plot && failure.is_none() {
        let p = dir.join(format!("{id}.svg"));
        fs::write(&p, plot::experiment_plot(&cfg, &all_rows))?;
        Some(p)
    } else {
        None
    };
    if let Some(f) = failure {
        return Err(CliError::Runtime(f));
    }
    Ok(RunOutcome { csv: csv_path, summary: summary_path, plot: plot_path, rows: all_rows.len(), passed, evaluated })
}

/// Minimum of the `fitted_c` column per body.
fn fitted_constants(cfg: &ExperimentConfig, rows: &[(u64, CellRow)]) -> BTreeMap<String, f64> {
    let s = schema(cfg.experiment);
    let Some(idx) = s.metrics.iter().position(|m| *m == "fitted_c") else {
        return BTreeMap::new();
    };
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for (_, r) in rows {
        if let Value::Float(v) = r.metrics[idx] {
            if v.is_finite() {
                let e = out.entry(r.body.clone()).or_insert(v);
                *e = e.min(v);
            }
        }
    }
    out
}

//! Experiment driver shared by the binary and the examples.

pub mod config;
pub mod linear;
pub mod table;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::classifier::{prepare_task, run_unlearning, summarize, FtVariant, SweepRow, SweepSummary};
use crate::error::{LabError, Result};
use crate::metrics::Metrics;

pub use config::{ExperimentConfig, ExperimentKind};
pub use table::{Cell, Table, SCHEMA_VERSION};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const THREADS_ENV: &str = "UNLEARN_LAB_THREADS";

pub const CLASSIFIER_COLUMNS: &[&str] = &[
    "experiment",
    "kind",
    "variant",
    "alpha",
    "seed",
    "ua",
    "ra",
    "ta",
    "retrain_ua",
    "retrain_ra",
    "retrain_ta",
    "runtime_seconds",
];

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub experiment: ExperimentKind,
    pub table: Table,
    pub csv: String,
    pub summary: serde_json::Value,
    pub failures: Vec<String>,
    pub exit_code: i32,
}

impl RunOutput {
    pub fn pass(&self) -> bool {
        self.exit_code == EXIT_PASS
    }

    /// Writes the CSV to `path` and the JSON summary next to it.
    pub fn write(&self, path: &Path) -> Result<(PathBuf, PathBuf)> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &self.csv)?;
        let json_path = summary_path(path);
        std::fs::write(&json_path, serde_json::to_string_pretty(&self.summary)?)?;
        Ok((path.to_path_buf(), json_path))
    }
}

pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Thread count from `UNLEARN_LAB_THREADS`, defaulting to 1.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| LabError::InvalidConfig(format!("{THREADS_ENV}={v} is not a positive integer"))),
    }
}

/// Maps `f` over the seeds on a pool of `threads` workers, keeping seed order.
fn per_seed<T: Send>(seeds: &[u64], threads: usize, f: impl Fn(u64) -> T + Sync) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| seeds.par_iter().map(|&s| f(s)).collect()))
}

/// Validates and runs one experiment with the thread count from the
/// environment.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    run_with_threads(cfg, thread_count()?)
}

pub fn run_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<RunOutput> {
    cfg.validate()?;
    let cfg = cfg.clone().materialize();
    let kind = cfg.kind()?;
    let (table, failures, extra) = match kind {
        ExperimentKind::VerifyTheorems => run_verify(&cfg, threads)?,
        ExperimentKind::SweepNt => run_linear_sweep(&cfg, threads, linear::SWEEP_NT_COLUMNS, linear::sweep_nt_seed)?,
        ExperimentKind::SweepOverlap => {
            run_linear_sweep(&cfg, threads, linear::SWEEP_OVERLAP_COLUMNS, linear::sweep_overlap_seed)?
        }
        ExperimentKind::ClassifierDemo => run_classifier(&cfg, threads, &[cfg.classifier.alpha])?,
        ExperimentKind::SweepAlpha => run_classifier(&cfg, threads, &cfg.classifier.alphas)?,
    };
    let exit_code = if failures.is_empty() { EXIT_PASS } else { EXIT_NUMERICAL };
    let summary = json!({
        "experiment": kind.name(),
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "columns": table.columns,
        "rows": table.rows.len(),
        "results": extra,
        "failures": failures,
        "pass": exit_code == EXIT_PASS,
        "exit_code": exit_code,
    });
    let csv = table.to_csv(kind.name(), &cfg);
    Ok(RunOutput { experiment: kind, table, csv, summary, failures, exit_code })
}

type Outcome = (Table, Vec<String>, serde_json::Value);

#[derive(Serialize)]
struct CheckTally {
    theorem: &'static str,
    model: &'static str,
    option: &'static str,
    checked: usize,
    passed: usize,
    max_abs_gap: f64,
    max_rel_gap: f64,
}

fn run_verify(cfg: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let per = per_seed(&cfg.seeds, threads, |seed| linear::verify_seed(cfg, seed))?;
    let mut table = Table::new(linear::VERIFY_COLUMNS);
    let mut failures = Vec::new();
    let mut tallies: Vec<CheckTally> = Vec::new();
    for row in per.into_iter().flatten() {
        let option = row.option.map_or("none", |o| o.name());
        let key = (row.theorem.name(), row.model.name(), option);
        let idx = match tallies.iter().position(|t| (t.theorem, t.model, t.option) == key) {
            Some(i) => i,
            None => {
                tallies.push(CheckTally {
                    theorem: key.0,
                    model: key.1,
                    option: key.2,
                    checked: 0,
                    passed: 0,
                    max_abs_gap: 0.0,
                    max_rel_gap: 0.0,
                });
                tallies.len() - 1
            }
        };
        let t = &mut tallies[idx];
        t.checked += 1;
        if row.pass() {
            t.passed += 1;
        } else {
            failures.push(format!(
                "seed {} layout {} n_t {} {} {} ({}) outside tolerance",
                row.seed,
                row.layout,
                row.n_t.map_or("all".to_string(), |n| n.to_string()),
                row.theorem.name(),
                row.model.name(),
                option
            ));
        }
        for f in &row.gap.fields {
            t.max_abs_gap = t.max_abs_gap.max(f.absolute);
            if f.predicted.abs() > cfg.tolerance.absolute {
                t.max_rel_gap = t.max_rel_gap.max(f.relative);
            }
        }
        table.push(row.cells());
    }
    Ok((table, failures, serde_json::to_value(tallies)?))
}

fn run_linear_sweep(
    cfg: &ExperimentConfig,
    threads: usize,
    columns: &'static [&'static str],
    f: fn(&ExperimentConfig, u64) -> Result<Vec<Vec<Cell>>>,
) -> Result<Outcome> {
    let per = per_seed(&cfg.seeds, threads, |seed| f(cfg, seed))?;
    let mut table = Table::new(columns);
    let mut failures = Vec::new();
    for (seed, rows) in cfg.seeds.iter().zip(per) {
        match rows {
            Ok(rows) => rows.into_iter().for_each(|r| table.push(r)),
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    Ok((table, failures, serde_json::Value::Null))
}

struct SeedRuns {
    retrained: Metrics,
    runs: Vec<SweepRow>,
}

fn classifier_seed(cfg: &ExperimentConfig, seed: u64, alphas: &[f64]) -> Result<SeedRuns> {
    let c = &cfg.classifier;
    let train_cfg = crate::classifier::FtConfig { seed, ..c.pretrain_config() };
    let task = prepare_task(&c.task, seed, &train_cfg)?;
    let mut runs = Vec::new();
    for &variant in &c.variants {
        // the unregularized variant ignores alpha; run it once
        let alphas_here: &[f64] = if variant.is_regularized() { alphas } else { &alphas[..1] };
        for &alpha in alphas_here {
            let (_, metrics) = run_unlearning(&task, &c.unlearn_config(variant, alpha, seed))?;
            runs.push(SweepRow { variant, alpha, seed, metrics });
        }
    }
    Ok(SeedRuns { retrained: task.retrained_metrics, runs })
}

struct RowKey<'a> {
    experiment: &'a str,
    kind: &'a str,
    variant: &'a str,
    alpha: f64,
    seed: Cell,
}

fn metric_cells(key: RowKey<'_>, m: &Metrics, r: &Metrics) -> Vec<Cell> {
    vec![
        key.experiment.into(),
        key.kind.into(),
        key.variant.into(),
        key.alpha.into(),
        key.seed,
        m.ua.into(),
        m.ra.into(),
        m.ta.into(),
        r.ua.into(),
        r.ra.into(),
        r.ta.into(),
        m.runtime_seconds.into(),
    ]
}

fn run_classifier(cfg: &ExperimentConfig, threads: usize, alphas: &[f64]) -> Result<Outcome> {
    let experiment = cfg.kind()?.name();
    let per = per_seed(&cfg.seeds, threads, |seed| classifier_seed(cfg, seed, alphas))?;
    let mut table = Table::new(CLASSIFIER_COLUMNS);
    let mut failures = Vec::new();
    let mut done: Vec<(SeedRuns, u64)> = Vec::new();
    for (&seed, outcome) in cfg.seeds.iter().zip(per) {
        match outcome {
            Ok(runs) => done.push((runs, seed)),
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let key = |kind, variant: FtVariant, alpha, seed| RowKey { experiment, kind, variant: variant.name(), alpha, seed };
    for (runs, seed) in &done {
        for r in &runs.runs {
            table.push(metric_cells(key("run", r.variant, r.alpha, (*seed).into()), &r.metrics, &runs.retrained));
        }
    }
    let mut summaries: Vec<SweepSummary> = Vec::new();
    if !done.is_empty() {
        let retrained: Vec<SweepRow> = done
            .iter()
            .map(|(r, seed)| SweepRow { variant: FtVariant::NaiveFt, alpha: 0.0, seed: *seed, metrics: r.retrained })
            .collect();
        let retrained = summarize(FtVariant::NaiveFt, 0.0, &retrained.iter().collect::<Vec<_>>());
        let keys: Vec<(FtVariant, f64)> = done[0].0.runs.iter().map(|r| (r.variant, r.alpha)).collect();
        for (variant, alpha) in keys {
            let rows: Vec<&SweepRow> = done
                .iter()
                .flat_map(|(r, _)| r.runs.iter())
                .filter(|r| r.variant == variant && r.alpha == alpha)
                .collect();
            let s = summarize(variant, alpha, &rows);
            table.push(metric_cells(key("mean", variant, alpha, "all".into()), &s.mean, &retrained.mean));
            table.push(metric_cells(key("std", variant, alpha, "all".into()), &s.std, &retrained.std));
            summaries.push(s);
        }
        let extra = json!({ "retrained": retrained.mean, "retrained_std": retrained.std, "summaries": summaries });
        return Ok((table, failures, extra));
    }
    Ok((table, failures, serde_json::Value::Null))
}

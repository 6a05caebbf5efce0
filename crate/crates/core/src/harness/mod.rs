//! Seeded experiment runs, artifacts and reports.
//!
//! A run directory holds the resolved `config.toml`, one `seed-<n>/`
//! directory per seed (`metrics.jsonl`, `ledger.json`, `checkpoint.json`)
//! and a `summary.json` / `summary.txt` pair.

mod config;
mod summary;
mod trainer;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advisor::{LedgerReport, QueryLedger};
use crate::error::{Error, Result};

pub use config::{AdvisorConfig, AdvisorKind, Algorithm, ExperimentConfig, Overrides};
pub use summary::{
    aggregate, mean_std, median_steps, moving_average, read_metrics, render_table, seed_dirs, summarize_curves,
    summarize_run, write_summary, Band, MethodSummary, SeedCurve, SeedSummary,
};
pub use trainer::{prefill_expert, MetricsRecord, StepReport, Trainer};

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    pub ledger: QueryLedger,
    pub guidance_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedResult>,
    pub summary: MethodSummary,
}

fn run_seed(config: &ExperimentConfig, seed: u64, dir: &Path) -> Result<SeedResult> {
    let seed_dir = dir.join(format!("seed-{seed}"));
    std::fs::create_dir_all(&seed_dir)?;
    let mut trainer = Trainer::new(config, seed)?;
    let mut out = BufWriter::new(File::create(seed_dir.join("metrics.jsonl"))?);
    let records = trainer.run(|r| {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    })?;
    std::fs::write(seed_dir.join("ledger.json"), serde_json::to_string_pretty(trainer.ledger())?)?;
    if config.checkpoints {
        trainer.agent().to_checkpoint().save(&seed_dir.join("checkpoint.json"))?;
    }
    log::info!(
        "{} {} seed {seed}: final success {:.2}, return {:.3}",
        config.env,
        config.algorithm.name(),
        records.last().map_or(0.0, |r| r.success),
        records.last().map_or(0.0, |r| r.episode_return)
    );
    Ok(SeedResult {
        seed,
        records,
        ledger: trainer.ledger().clone(),
        guidance_pairs: trainer.guidance().len(),
    })
}

/// Runs every seed of `config` into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.toml"), config.to_toml()?)?;
    let seeds = config
        .seed_execution
        .map(&config.seeds, |seed| run_seed(config, *seed, &dir))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let curves: Vec<SeedCurve> = seeds.iter().map(|s| SeedCurve::from_records(s.seed, &s.records)).collect();
    let label = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| config.algorithm.name().to_string());
    let summary = summarize_curves(&label, config, &curves)?;
    write_summary(std::slice::from_ref(&summary), &dir)?;
    Ok(RunResult {
        dir,
        config: config.clone(),
        seeds,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLedger {
    pub seed: u64,
    pub report: LedgerReport,
}

/// Per-seed query-budget reports of a run directory.
pub fn query_ledger_report(run_dir: &Path) -> Result<Vec<SeedLedger>> {
    let mut out = Vec::new();
    for (seed, dir) in seed_dirs(run_dir)? {
        let text = std::fs::read_to_string(dir.join("ledger.json"))?;
        let ledger: QueryLedger = serde_json::from_str(&text)?;
        out.push(SeedLedger {
            seed,
            report: ledger.report(),
        });
    }
    if out.is_empty() {
        return Err(Error::Config(format!("{} holds no seed ledgers", run_dir.display())));
    }
    Ok(out)
}

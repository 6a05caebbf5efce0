//! Learning-curve aggregation across seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::trainer::MetricsRecord;
use crate::envs::{make_task, RewardRegime};
use crate::error::{Error, Result};

/// Trailing moving average; the first `window - 1` points average what is
/// available.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Median with `None` standing for "never reached" (sorted above every step).
pub fn median_steps(steps: &[Option<u64>]) -> Option<f64> {
    if steps.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = steps.iter().map(|s| s.map_or(f64::INFINITY, |x| x as f64)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

/// One seed's evaluation curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedCurve {
    pub seed: u64,
    pub steps: Vec<u64>,
    pub success: Vec<f64>,
    pub returns: Vec<f64>,
    pub oracle_return: f64,
}

impl SeedCurve {
    pub fn from_records(seed: u64, records: &[MetricsRecord]) -> Self {
        Self {
            seed,
            steps: records.iter().map(|r| r.step).collect(),
            success: records.iter().map(|r| r.success).collect(),
            returns: records.iter().map(|r| r.episode_return).collect(),
            oracle_return: records.first().map_or(0.0, |r| r.oracle_return),
        }
    }

    /// The thresholded metric: success rate, or return as a fraction of the
    /// oracle's return.
    pub fn metric(&self, use_success: bool) -> Vec<f64> {
        if use_success {
            self.success.clone()
        } else {
            let scale = if self.oracle_return > 0.0 { self.oracle_return } else { 1.0 };
            self.returns.iter().map(|r| r / scale).collect()
        }
    }

    /// First evaluation step whose moving-average metric reaches `threshold`.
    /// Only full windows count, so a lucky early evaluation cannot pass for
    /// sustained success.
    pub fn steps_to_threshold(&self, use_success: bool, window: usize, threshold: f64) -> Option<u64> {
        let ma = moving_average(&self.metric(use_success), window);
        let first_full = window.max(1) - 1;
        ma.iter()
            .enumerate()
            .skip(first_full)
            .find(|(_, v)| **v >= threshold)
            .map(|(i, _)| self.steps[i])
    }

    /// Value at each grid step, holding the latest evaluation at or before it.
    fn resample(&self, grid: &[u64], values: &[f64]) -> Vec<f64> {
        grid.iter()
            .map(|g| {
                let i = self.steps.partition_point(|s| s <= g);
                if i == 0 { values[0] } else { values[i - 1] }
            })
            .collect()
    }
}

/// Mean and one-standard-deviation band of smoothed curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub steps: Vec<u64>,
    pub success_mean: Vec<f64>,
    pub success_std: Vec<f64>,
    pub return_mean: Vec<f64>,
    pub return_std: Vec<f64>,
    pub resampled: bool,
}

/// Smooths every seed with a window of `window` evaluation points and
/// aggregates pointwise. Seeds on different evaluation grids are resampled
/// onto the coarsest one.
pub fn aggregate(curves: &[SeedCurve], window: usize) -> Result<Band> {
    let coarsest = curves
        .iter()
        .filter(|c| !c.steps.is_empty())
        .min_by_key(|c| c.steps.len())
        .ok_or_else(|| Error::Config("no evaluation records to aggregate".into()))?;
    let grid = coarsest.steps.clone();
    let resampled = curves.iter().any(|c| c.steps != grid);
    if resampled {
        log::warn!("evaluation grids differ across seeds; resampling onto {} points", grid.len());
    }
    let smooth = |c: &SeedCurve, v: &[f64]| c.resample(&grid, &moving_average(v, window));
    let success: Vec<Vec<f64>> = curves.iter().map(|c| smooth(c, &c.success)).collect();
    let returns: Vec<Vec<f64>> = curves.iter().map(|c| smooth(c, &c.returns)).collect();
    let column = |rows: &[Vec<f64>], i: usize| rows.iter().map(|r| r[i]).collect::<Vec<_>>();
    let mut band = Band {
        steps: grid.clone(),
        success_mean: Vec::new(),
        success_std: Vec::new(),
        return_mean: Vec::new(),
        return_std: Vec::new(),
        resampled,
    };
    for i in 0..grid.len() {
        let (m, s) = mean_std(&column(&success, i));
        band.success_mean.push(m);
        band.success_std.push(s);
        let (m, s) = mean_std(&column(&returns, i));
        band.return_mean.push(m);
        band.return_std.push(s);
    }
    Ok(band)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub steps_to_threshold: Option<u64>,
    pub final_success: f64,
    pub final_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub label: String,
    pub env: String,
    pub algorithm: String,
    pub metric: String,
    pub threshold: f64,
    pub max_steps: u64,
    pub seeds: Vec<SeedSummary>,
    pub reached: usize,
    /// `None` when at least half the seeds never reached the threshold.
    pub median_steps: Option<f64>,
    /// Over seeds that reached the threshold.
    pub mean_steps: Option<f64>,
    pub std_steps: Option<f64>,
    pub band: Band,
}

pub fn summarize_curves(label: &str, config: &ExperimentConfig, curves: &[SeedCurve]) -> Result<MethodSummary> {
    let use_success = make_task(&config.env)?.spec().reward_regime == RewardRegime::SparseEvent;
    let window = config.smoothing_window;
    let seeds: Vec<SeedSummary> = curves
        .iter()
        .map(|c| SeedSummary {
            seed: c.seed,
            steps_to_threshold: c.steps_to_threshold(use_success, window, config.threshold),
            final_success: c.success.last().copied().unwrap_or(0.0),
            final_return: c.returns.last().copied().unwrap_or(0.0),
        })
        .collect();
    let steps: Vec<Option<u64>> = seeds.iter().map(|s| s.steps_to_threshold).collect();
    let reached: Vec<f64> = steps.iter().flatten().map(|s| *s as f64).collect();
    let (mean, std) = mean_std(&reached);
    Ok(MethodSummary {
        label: label.to_string(),
        env: config.env.clone(),
        algorithm: config.algorithm.name().to_string(),
        metric: if use_success { "success".into() } else { "return/oracle".into() },
        threshold: config.threshold,
        max_steps: config.max_steps,
        reached: reached.len(),
        median_steps: median_steps(&steps),
        mean_steps: (!reached.is_empty()).then_some(mean),
        std_steps: (!reached.is_empty()).then_some(std),
        band: aggregate(curves, window)?,
        seeds,
    })
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut out: Vec<MetricsRecord> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let r: MetricsRecord = serde_json::from_str(line)?;
        if out.last().is_some_and(|p| p.step >= r.step) {
            return Err(Error::Config(format!("{}: steps are not increasing", path.display())));
        }
        out.push(r);
    }
    Ok(out)
}

/// Seed directories (`seed-<n>`) of a run directory, in seed order.
pub fn seed_dirs(run_dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(run_dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(seed) = name.strip_prefix("seed-").and_then(|s| s.parse::<u64>().ok()) {
            if entry.path().is_dir() {
                out.push((seed, entry.path()));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Summarizes a run directory produced by `run`.
pub fn summarize_run(run_dir: &Path) -> Result<MethodSummary> {
    let config = ExperimentConfig::load(&run_dir.join("config.toml"))?;
    let mut curves = Vec::new();
    for (seed, dir) in seed_dirs(run_dir)? {
        curves.push(SeedCurve::from_records(seed, &read_metrics(&dir.join("metrics.jsonl"))?));
    }
    if curves.is_empty() {
        return Err(Error::Config(format!("{} holds no completed seeds", run_dir.display())));
    }
    let label = run_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| config.algorithm.name().to_string());
    summarize_curves(&label, &config, &curves)
}

fn fmt_steps(v: Option<f64>) -> String {
    v.map_or("never".to_string(), |x| format!("{x:.0}"))
}

pub fn render_table(summaries: &[MethodSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<24} {:<12} {:<18} {:>7} {:>10} {:>10} {:>10}  per-seed",
        "method", "env", "algorithm", "reached", "median", "mean", "std"
    );
    for m in summaries {
        let per_seed: Vec<String> = m
            .seeds
            .iter()
            .map(|s| format!("{}:{}", s.seed, fmt_steps(s.steps_to_threshold.map(|x| x as f64))))
            .collect();
        let _ = writeln!(
            s,
            "{:<24} {:<12} {:<18} {:>3}/{:<3} {:>10} {:>10} {:>10}  {}",
            m.label,
            m.env,
            m.algorithm,
            m.reached,
            m.seeds.len(),
            fmt_steps(m.median_steps),
            m.mean_steps.map_or("-".into(), |x| format!("{x:.0}")),
            m.std_steps.map_or("-".into(), |x| format!("{x:.0}")),
            per_seed.join(" ")
        );
    }
    s
}

/// Writes `summary.json`, `summary.txt` and one `curves-<label>.csv` per
/// method into `out`.
pub fn write_summary(summaries: &[MethodSummary], out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let by_label: BTreeMap<&str, &MethodSummary> = summaries.iter().map(|m| (m.label.as_str(), m)).collect();
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&by_label)?)?;
    std::fs::write(out.join("summary.txt"), render_table(summaries))?;
    for m in summaries {
        let mut csv = String::from("step,success_mean,success_std,return_mean,return_std\n");
        let b = &m.band;
        for i in 0..b.steps.len() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                b.steps[i], b.success_mean[i], b.success_std[i], b.return_mean[i], b.return_std[i]
            );
        }
        std::fs::write(out.join(format!("curves-{}.csv", m.label)), csv)?;
    }
    Ok(())
}

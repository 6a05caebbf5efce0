//! Action advisors and the trigger machinery that feeds the guidance buffer.
//!
//! At each trigger step the advisor labels the `K` most recent transitions;
//! every reply that parses into an in-space action becomes a guidance pair.
//! Advisor failures are counted and skipped, never propagated.

pub mod mock;
mod prompt;
pub mod remote;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::buffers::{GuidanceBuffer, GuidancePair, ReplayBuffer};
use crate::envs::{Action, ActionSpace, Task};
use crate::error::{Error, Result};

pub use prompt::{parse_answer, render_answer, render_prompt, render_repair, render_vector, AdvisorRequest};
pub use remote::{RemoteAdvisor, RemoteConfig};

/// Trigger steps `S_h` and the recent-sample size `K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerSchedule {
    steps: BTreeSet<u64>,
    k: usize,
}

impl TriggerSchedule {
    pub fn new(steps: impl IntoIterator<Item = u64>, k: usize) -> Result<Self> {
        let steps: BTreeSet<u64> = steps.into_iter().collect();
        if steps.contains(&0) {
            return Err(Error::Config("trigger steps start at 1".into()));
        }
        if k == 0 {
            return Err(Error::Config("recent-sample size K must be >= 1".into()));
        }
        Ok(Self { steps, k })
    }

    /// Triggers at the given fractions of `horizon`, rounded to the nearest
    /// step (minimum 1).
    pub fn from_fractions(fractions: &[f64], horizon: u64, k: usize) -> Result<Self> {
        if fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::Config("trigger fractions must lie in (0, 1]".into()));
        }
        Self::new(fractions.iter().map(|f| ((f * horizon as f64).round() as u64).max(1)), k)
    }

    pub fn empty() -> Self {
        Self {
            steps: BTreeSet::new(),
            k: 1,
        }
    }

    pub fn steps(&self) -> impl Iterator<Item = u64> + '_ {
        self.steps.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn contains(&self, t: u64) -> bool {
        self.steps.contains(&t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseStatus {
    Parsed,
    ParseFailure,
    TransportFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorResponse {
    /// Raw completion text (empty on transport failure).
    pub suggested_action: String,
    /// Present only when the reply parsed into an in-space action.
    pub parsed_action: Option<Action>,
    pub status: ResponseStatus,
    pub cached: bool,
    pub latency: Duration,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvisorStats {
    /// Requests answered, including cache hits.
    pub requests: u64,
    pub network_calls: u64,
    pub cache_hits: u64,
    pub repairs: u64,
    pub parse_failures: u64,
    pub transport_failures: u64,
}

/// `F(s, a) -> a_llm`, batched so remote advisors can overlap requests.
pub trait Advisor: Send {
    fn advise(&mut self, requests: &[AdvisorRequest]) -> Vec<AdvisorResponse>;
    fn stats(&self) -> AdvisorStats;
}

/// Quality knobs of the scripted advisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdvisorQuality {
    /// Probability of returning the oracle action (discrete).
    pub accuracy: f64,
    /// Additive bias per dimension (box); empty means zero.
    pub bias: Vec<f64>,
    /// Gaussian noise scale (box).
    pub noise: f64,
}

impl Default for AdvisorQuality {
    fn default() -> Self {
        Self {
            accuracy: 0.8,
            bias: Vec::new(),
            noise: 0.0,
        }
    }
}

impl AdvisorQuality {
    pub fn perfect() -> Self {
        Self {
            accuracy: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(Error::Config("advisor accuracy must lie in [0, 1]".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || self.bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("advisor bias and noise must be finite, noise >= 0".into()));
        }
        Ok(())
    }
}

/// Oracle action corrupted according to `quality`.
pub fn scripted_advise<R: Rng + ?Sized>(task: &dyn Task, state: &[f64], quality: &AdvisorQuality, rng: &mut R) -> Action {
    let oracle = task.oracle_action(state);
    match (&task.spec().action_space, oracle) {
        (ActionSpace::Discrete { n }, Action::Discrete(best)) => {
            if rng.random::<f64>() < quality.accuracy {
                Action::Discrete(best)
            } else {
                let k = rng.random_range(0..n - 1);
                Action::Discrete(if k >= best { k + 1 } else { k })
            }
        }
        (space, Action::Continuous(v)) => {
            let noisy: Vec<f64> = v
                .iter()
                .enumerate()
                .map(|(d, x)| {
                    let eps: f64 = if quality.noise > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                    x + quality.bias.get(d).copied().unwrap_or(0.0) + quality.noise * eps
                })
                .collect();
            Action::Continuous(space.clip(&noisy))
        }
        (_, a) => a,
    }
}

/// In-process advisor backed by the task's oracle.
#[derive(Debug)]
pub struct ScriptedAdvisor {
    task: Arc<dyn Task>,
    quality: AdvisorQuality,
    rng: ChaCha8Rng,
    stats: AdvisorStats,
}

impl ScriptedAdvisor {
    pub fn new(task: Arc<dyn Task>, quality: AdvisorQuality, rng: ChaCha8Rng) -> Result<Self> {
        quality.validate()?;
        Ok(Self {
            task,
            quality,
            rng,
            stats: AdvisorStats::default(),
        })
    }
}

impl Advisor for ScriptedAdvisor {
    fn advise(&mut self, requests: &[AdvisorRequest]) -> Vec<AdvisorResponse> {
        requests
            .iter()
            .map(|req| {
                let start = Instant::now();
                let action = scripted_advise(self.task.as_ref(), &req.state, &self.quality, &mut self.rng);
                self.stats.requests += 1;
                AdvisorResponse {
                    suggested_action: render_answer(&req.space, &req.labels, &action),
                    parsed_action: Some(action),
                    status: ResponseStatus::Parsed,
                    cached: false,
                    latency: start.elapsed(),
                }
            })
            .collect()
    }

    fn stats(&self) -> AdvisorStats {
        self.stats
    }
}

/// One trigger batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub step: u64,
    pub replay_len: usize,
    pub requested: usize,
    pub added: usize,
    pub parse_failures: usize,
    pub transport_failures: usize,
}

/// If `t` is a trigger step, labels `recent(K)` and appends every parsed
/// pair to `guidance`. Returns `None` (and touches nothing) otherwise.
pub fn run_trigger(
    schedule: &TriggerSchedule,
    t: u64,
    replay: &ReplayBuffer,
    task: &dyn Task,
    advisor: &mut dyn Advisor,
    guidance: &mut GuidanceBuffer,
) -> Option<TriggerRecord> {
    if !schedule.contains(t) {
        return None;
    }
    let recent = replay.recent(schedule.k());
    let requests: Vec<AdvisorRequest> = recent
        .iter()
        .map(|tr| AdvisorRequest::new(task, &tr.state, &tr.action))
        .collect();
    let responses = advisor.advise(&requests);
    let mut record = TriggerRecord {
        step: t,
        replay_len: replay.len(),
        requested: requests.len(),
        added: 0,
        parse_failures: 0,
        transport_failures: 0,
    };
    for (req, resp) in requests.into_iter().zip(responses) {
        match (resp.status, resp.parsed_action) {
            (ResponseStatus::Parsed, Some(action)) => {
                let pair = GuidancePair {
                    state: req.state,
                    action,
                };
                match guidance.push(pair) {
                    Ok(()) => record.added += 1,
                    Err(e) => {
                        log::warn!("step {t}: dropping advisor pair: {e}");
                        record.parse_failures += 1;
                    }
                }
            }
            (ResponseStatus::TransportFailure, _) => record.transport_failures += 1,
            _ => record.parse_failures += 1,
        }
    }
    if record.transport_failures > 0 || record.parse_failures > 0 {
        log::warn!(
            "step {t}: {} of {} advisor requests skipped ({} transport, {} unparsed)",
            record.transport_failures + record.parse_failures,
            record.requested,
            record.transport_failures,
            record.parse_failures
        );
    }
    Some(record)
}

/// Advisor usage over a run, at trigger-batch and per-sample granularity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub records: Vec<TriggerRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub trigger_batches: usize,
    /// Common batch size, or `None` when there were no batches or sizes differ.
    pub batch_size: Option<usize>,
    pub batch_sizes: Vec<usize>,
    pub total_samples: usize,
    pub pairs_added: usize,
}

impl QueryLedger {
    pub fn push(&mut self, record: TriggerRecord) {
        self.records.push(record);
    }

    pub fn report(&self) -> LedgerReport {
        let sizes: Vec<usize> = self.records.iter().map(|r| r.requested).collect();
        let batch_size = match sizes.split_first() {
            Some((first, rest)) if rest.iter().all(|s| s == first) => Some(*first),
            _ => None,
        };
        LedgerReport {
            trigger_batches: sizes.len(),
            batch_size,
            total_samples: sizes.iter().sum(),
            pairs_added: self.records.iter().map(|r| r.added).sum(),
            batch_sizes: sizes,
        }
    }
}

impl std::fmt::Display for LedgerReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let size = match (self.batch_size, self.trigger_batches) {
            (_, 0) => "-".to_string(),
            (Some(s), _) => s.to_string(),
            (None, _) => format!("{:?}", self.batch_sizes),
        };
        write!(
            f,
            "{:>15} {:>17} {:>14} {:>12}\n{:>15} {:>17} {:>14} {:>12}",
            "trigger batches",
            "samples per batch",
            "total samples",
            "pairs added",
            self.trigger_batches,
            size,
            self.total_samples,
            self.pairs_added
        )
    }
}

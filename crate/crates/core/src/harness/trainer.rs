//! One seeded training run.
//!
//! Each step: act (uniform during warmup), store the transition, run the
//! advisor if the step is a trigger, then one critic update and one actor
//! update on the shaped loss. Randomness is split into independent streams
//! so that runs differing only in guidance consume identical randomness for
//! everything else.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{AdvisorKind, Algorithm, ExperimentConfig};
use crate::advisor::{
    run_trigger, Advisor, AdvisorStats, QueryLedger, RemoteAdvisor, ScriptedAdvisor, TriggerRecord, TriggerSchedule,
};
use crate::buffers::{GuidanceBuffer, ReplayBuffer, Transition};
use crate::envs::{make_task, oracle_rollout, Env, RewardRegime, Task};
use crate::error::{Error, Result};
use crate::sac::{ActMode, CriticStats, SacAgent};
use crate::shaping::actor_loss;

const STREAM_INIT: u64 = 0;
const STREAM_ENV: u64 = 1;
const STREAM_ACT: u64 = 2;
const STREAM_BATCH: u64 = 3;
const STREAM_NOISE: u64 = 4;
const STREAM_GUIDANCE: u64 = 5;
const STREAM_ADVISOR: u64 = 6;
const STREAM_EXPERT: u64 = 7;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    /// Mean undiscounted return over the evaluation episodes.
    pub episode_return: f64,
    /// Fraction of evaluation episodes that succeeded.
    pub success: f64,
    /// Mean policy entropy over states visited during evaluation.
    pub policy_entropy: f64,
    /// Fraction of sampled guidance pairs with an open gate since the last record.
    pub gate_activation_rate: f64,
    /// Mean shaping loss over actor updates that sampled guidance since the last record.
    pub shaping_loss: f64,
    pub critic_loss: f64,
    pub alpha: f64,
    pub guidance_pairs: usize,
    pub advisor_requests: u64,
    pub advisor_network_calls: u64,
    pub advisor_failures: u64,
    pub oracle_return: f64,
    pub train_episodes: u64,
    pub wall_clock_s: f64,
}

/// What happened in a single call to [`Trainer::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub t: u64,
    pub reward: f64,
    pub done: bool,
    pub trigger: Option<TriggerRecord>,
    pub critic: Option<CriticStats>,
    /// Baseline policy loss and the full actor loss of this step's update.
    pub baseline_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    /// `(active, sampled)` guidance pairs, when guidance was sampled.
    pub gate: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Default)]
struct Window {
    gate_active: usize,
    gate_sampled: usize,
    shaping_loss: f64,
    shaping_updates: usize,
    critic_loss: f64,
    critic_updates: usize,
}

struct Streams {
    env: ChaCha8Rng,
    act: ChaCha8Rng,
    batch: ChaCha8Rng,
    noise: ChaCha8Rng,
    guidance: ChaCha8Rng,
}

impl Clone for Streams {
    fn clone(&self) -> Self {
        Self {
            env: self.env.clone(),
            act: self.act.clone(),
            batch: self.batch.clone(),
            noise: self.noise.clone(),
            guidance: self.guidance.clone(),
        }
    }
}

pub struct Trainer {
    config: ExperimentConfig,
    seed: u64,
    task: Arc<dyn Task>,
    env: Env,
    state: Vec<f64>,
    agent: SacAgent,
    replay: ReplayBuffer,
    guidance: GuidanceBuffer,
    schedule: TriggerSchedule,
    advisor: Option<Box<dyn Advisor>>,
    ledger: QueryLedger,
    rng: Streams,
    t: u64,
    train_episodes: u64,
    window: Window,
    eval_seeds: Vec<u64>,
    oracle_return: f64,
    started: Instant,
}

impl std::fmt::Debug for Trainer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trainer")
            .field("env", &self.config.env)
            .field("algorithm", &self.config.algorithm)
            .field("seed", &self.seed)
            .field("t", &self.t)
            .finish()
    }
}

/// Pushes `episodes` oracle rollouts into `replay`. Returns the number of
/// transitions added.
pub fn prefill_expert(replay: &mut ReplayBuffer, task: &Arc<dyn Task>, episodes: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
    let mut env = Env::new(task.clone());
    let mut added = 0;
    for _ in 0..episodes {
        let mut s = env.reset_with(rng);
        loop {
            let a = task.oracle_action(&s);
            let step = env.step(&a)?;
            replay.push(Transition {
                state: s,
                action: a,
                reward: step.reward,
                next_state: step.next_state.clone(),
                terminal: step.done && !step.truncated,
                truncated: step.truncated,
            })?;
            added += 1;
            s = step.next_state;
            if step.done {
                break;
            }
        }
    }
    Ok(added)
}

impl Trainer {
    /// Builds a run with the advisor described by the config.
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let task = make_task(&config.env)?;
        let advisor: Option<Box<dyn Advisor>> = match (config.algorithm, config.advisor.kind) {
            (Algorithm::Varl, AdvisorKind::Scripted) => Some(Box::new(ScriptedAdvisor::new(
                task.clone(),
                config.advisor.quality.clone(),
                stream(seed, STREAM_ADVISOR),
            )?)),
            (Algorithm::Varl, AdvisorKind::Remote) => Some(Box::new(RemoteAdvisor::new(config.advisor.remote.clone())?)),
            _ => None,
        };
        Self::with_advisor(config, seed, advisor)
    }

    pub fn with_advisor(config: &ExperimentConfig, seed: u64, advisor: Option<Box<dyn Advisor>>) -> Result<Self> {
        config.validate()?;
        let task = make_task(&config.env)?;
        let spec = task.spec().clone();
        let agent = SacAgent::new(
            spec.state_dim,
            &spec.action_space,
            config.sac.clone(),
            &mut stream(seed, STREAM_INIT),
        )?;
        let mut replay = ReplayBuffer::new(config.replay_capacity, spec.state_dim, spec.action_space.clone())?;
        if config.algorithm == Algorithm::SacExpertPrefill {
            prefill_expert(&mut replay, &task, config.expert_episodes, &mut stream(seed, STREAM_EXPERT))?;
        }
        let eval_seeds: Vec<u64> = (0..config.eval_episodes as u64)
            .map(|i| seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1_000_003 * (i + 1)))
            .collect();
        let mut oracle_env = Env::new(task.clone());
        let oracle_return =
            eval_seeds.iter().map(|s| oracle_rollout(&mut oracle_env, *s).1).sum::<f64>() / eval_seeds.len() as f64;
        let mut rng = Streams {
            env: stream(seed, STREAM_ENV),
            act: stream(seed, STREAM_ACT),
            batch: stream(seed, STREAM_BATCH),
            noise: stream(seed, STREAM_NOISE),
            guidance: stream(seed, STREAM_GUIDANCE),
        };
        let mut env = Env::new(task.clone());
        let state = env.reset_with(&mut rng.env);
        Ok(Self {
            schedule: config.schedule()?,
            guidance: GuidanceBuffer::new(spec.action_space.clone(), None),
            config: config.clone(),
            seed,
            task,
            env,
            state,
            agent,
            replay,
            advisor,
            ledger: QueryLedger::default(),
            rng,
            t: 0,
            train_episodes: 0,
            window: Window::default(),
            eval_seeds,
            oracle_return,
            started: Instant::now(),
        })
    }

    /// Copy of the run under another algorithm label, sharing every buffer,
    /// parameter and random stream. The advisor is not carried over, so no
    /// further trigger batches can add guidance.
    pub fn fork(&self, algorithm: Algorithm) -> Self {
        let mut config = self.config.clone();
        config.algorithm = algorithm;
        Self {
            config,
            seed: self.seed,
            task: self.task.clone(),
            env: self.env.clone(),
            state: self.state.clone(),
            agent: self.agent.clone(),
            replay: self.replay.clone(),
            guidance: self.guidance.clone(),
            schedule: self.schedule.clone(),
            advisor: None,
            ledger: self.ledger.clone(),
            rng: self.rng.clone(),
            t: self.t,
            train_episodes: self.train_episodes,
            window: self.window.clone(),
            eval_seeds: self.eval_seeds.clone(),
            oracle_return: self.oracle_return,
            started: self.started,
        }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn agent(&self) -> &SacAgent {
        &self.agent
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn guidance(&self) -> &GuidanceBuffer {
        &self.guidance
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn task(&self) -> &Arc<dyn Task> {
        &self.task
    }

    pub fn oracle_return(&self) -> f64 {
        self.oracle_return
    }

    pub fn advisor_stats(&self) -> AdvisorStats {
        self.advisor.as_ref().map(|a| a.stats()).unwrap_or_default()
    }

    /// One global step.
    pub fn step(&mut self) -> Result<StepReport> {
        self.t += 1;
        let t = self.t;
        let action = if t <= self.config.warmup_steps {
            self.task.spec().action_space.sample(&mut self.rng.act)
        } else {
            self.agent.act(&self.state, ActMode::Stochastic, &mut self.rng.act)?
        };
        let result = self.env.step(&action)?;
        self.replay.push(Transition {
            state: std::mem::take(&mut self.state),
            action,
            reward: result.reward,
            next_state: result.next_state.clone(),
            terminal: result.done && !result.truncated,
            truncated: result.truncated,
        })?;
        self.state = if result.done {
            self.train_episodes += 1;
            self.env.reset_with(&mut self.rng.env)
        } else {
            result.next_state
        };

        let trigger = match self.advisor.as_deref_mut() {
            Some(advisor) => run_trigger(&self.schedule, t, &self.replay, self.task.as_ref(), advisor, &mut self.guidance),
            None => None,
        };
        if let Some(record) = &trigger {
            self.ledger.push(record.clone());
        }

        let mut report = StepReport {
            t,
            reward: result.reward,
            done: result.done,
            trigger,
            critic: None,
            baseline_loss: None,
            actor_loss: None,
            gate: None,
        };
        if t > self.config.warmup_steps {
            self.update(&mut report)?;
        }
        Ok(report)
    }

    fn update(&mut self, report: &mut StepReport) -> Result<()> {
        let b = self.config.sac.batch_size;
        let batch = self.replay.sample_refs(b, &mut self.rng.batch)?;
        let noise = self.agent.sample_noise(b, &mut self.rng.noise);
        let critic = self.agent.critic_update(&batch, &noise)?;
        if !(critic.loss1.is_finite() && critic.loss2.is_finite()) {
            return Err(Error::NonFinite(format!("critic loss at step {}", self.t)));
        }

        let states: Vec<&[f64]> = batch.iter().map(|tr| tr.state.as_slice()).collect();
        let noise = self.agent.sample_noise(b, &mut self.rng.noise);
        let shaped = self.config.algorithm == Algorithm::Varl
            && self.config.shaping.shaping_active(self.t)
            && !self.guidance.is_empty();
        let guidance = if shaped {
            self.guidance.sample(self.config.shaping.guidance_batch, &mut self.rng.guidance)?
        } else {
            Vec::new()
        };
        let step = actor_loss(&self.agent, &self.config.shaping, self.t, &states, &noise, &guidance)?;
        let loss = step.loss();
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("actor loss at step {}", self.t)));
        }
        self.agent.apply_actor_gradients(&step.grads())?;
        self.agent.update_temperature(step.baseline.mean_log_prob)?;

        self.window.critic_loss += 0.5 * (critic.loss1 + critic.loss2);
        self.window.critic_updates += 1;
        if let Some(s) = &step.shaping {
            self.window.gate_active += s.active;
            self.window.gate_sampled += s.batch;
            self.window.shaping_loss += s.loss;
            self.window.shaping_updates += 1;
            report.gate = Some((s.active, s.batch));
        }
        report.critic = Some(critic);
        report.baseline_loss = Some(step.baseline.loss);
        report.actor_loss = Some(loss);
        Ok(())
    }

    /// Deterministic-policy evaluation on the run's fixed evaluation seeds:
    /// `(mean return, success rate, mean entropy)`.
    pub fn evaluate(&self) -> Result<(f64, f64, f64)> {
        let exec = self.config.sac.execution;
        let (agent, task) = (&self.agent, &self.task);
        let results = exec.map(&self.eval_seeds, |seed| -> Result<(f64, bool, f64, usize)> {
            let mut env = Env::new(task.clone());
            let mut s = env.reset(*seed);
            let mut total = 0.0;
            let mut entropy = 0.0;
            let mut steps = 0;
            let mut unused = ChaCha8Rng::seed_from_u64(0);
            loop {
                entropy += agent.policy(&s)?.entropy().unwrap_or(0.0);
                let a = agent.act(&s, ActMode::Deterministic, &mut unused)?;
                let r = env.step(&a)?;
                total += r.reward;
                steps += 1;
                s = r.next_state;
                if r.done {
                    return Ok((total, r.success, entropy, steps));
                }
            }
        });
        let mut ret = 0.0;
        let mut succ = 0.0;
        let mut ent = 0.0;
        let mut steps = 0;
        for r in results {
            let (total, success, entropy, n) = r?;
            ret += total;
            succ += if success { 1.0 } else { 0.0 };
            ent += entropy;
            steps += n;
        }
        let n = self.eval_seeds.len() as f64;
        Ok((ret / n, succ / n, ent / steps as f64))
    }

    /// Evaluates and resets the diagnostic window.
    pub fn record(&mut self) -> Result<MetricsRecord> {
        let (episode_return, success, policy_entropy) = self.evaluate()?;
        let w = std::mem::take(&mut self.window);
        let stats = self.advisor_stats();
        let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };
        Ok(MetricsRecord {
            step: self.t,
            episode_return,
            success,
            policy_entropy,
            gate_activation_rate: ratio(w.gate_active as f64, w.gate_sampled),
            shaping_loss: ratio(w.shaping_loss, w.shaping_updates),
            critic_loss: ratio(w.critic_loss, w.critic_updates),
            alpha: self.agent.alpha(),
            guidance_pairs: self.guidance.len(),
            advisor_requests: stats.requests,
            advisor_network_calls: stats.network_calls,
            advisor_failures: stats.parse_failures + stats.transport_failures,
            oracle_return: self.oracle_return,
            train_episodes: self.train_episodes,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        })
    }

    /// Trains to `max_steps`, handing each evaluation record to `sink`.
    pub fn run(&mut self, mut sink: impl FnMut(&MetricsRecord) -> Result<()>) -> Result<Vec<MetricsRecord>> {
        let mut records = Vec::new();
        while self.t < self.config.max_steps {
            self.step()?;
            if self.t % self.config.eval_every == 0 || self.t == self.config.max_steps {
                let r = self.record()?;
                sink(&r)?;
                records.push(r);
            }
        }
        Ok(records)
    }

    /// Whether the threshold metric for this env is success (event tasks) or
    /// the return ratio against the oracle.
    pub fn uses_success(&self) -> bool {
        self.task.spec().reward_regime == RewardRegime::SparseEvent
    }
}

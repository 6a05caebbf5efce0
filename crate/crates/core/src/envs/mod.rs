//! Desk-scale episodic environments.
//!
//! Each task is a pure, deterministic transition function over a state
//! vector; [`Env`] adds the episode bookkeeping (step counter, sticky done,
//! timeout truncation). Every task ships a scripted oracle policy that solves
//! it from any reachable state.

pub mod chain;
pub mod grid;
pub mod point_push;
pub mod point_reach;
mod space;
pub mod two_state;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};

pub use chain::ChainMdp;
pub use grid::SparseGridWorld;
pub use point_push::PointPush;
pub use point_reach::PointReach;
pub use space::{Action, ActionSpace};
pub use two_state::TwoStateMdp;

/// Names accepted by [`make_env`].
pub const ENV_NAMES: [&str; 5] = ["sparse-grid", "chain", "point-reach", "point-push", "two-state"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardRegime {
    Dense,
    SparseEvent,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub state_dim: usize,
    pub action_space: ActionSpace,
    pub max_episode_steps: usize,
    pub reward_regime: RewardRegime,
}

/// Result of one environment step. `done` covers both true termination and
/// timeout; `truncated` marks the timeout case so critics can bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
    pub success: bool,
}

/// Outcome of a single transition, before episode bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
    pub success: bool,
}

pub trait Task: Send + Sync + std::fmt::Debug {
    fn spec(&self) -> &EnvSpec;
    /// Draw a state from the initial-state distribution.
    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    /// Deterministic transition. `action` is already validated.
    fn transition(&self, state: &[f64], action: &Action) -> Outcome;
    fn oracle_action(&self, state: &[f64]) -> Action;
    /// One-paragraph instruction used in advisor prompts.
    fn description(&self) -> String;
    /// Named, human-readable fields decoded from the state vector.
    fn semantic_fields(&self, state: &[f64]) -> Vec<(String, String)>;
    /// Labels for discrete actions (empty for box spaces).
    fn action_labels(&self) -> Vec<String> {
        Vec::new()
    }
}

/// An episodic wrapper around a [`Task`].
#[derive(Debug, Clone)]
pub struct Env {
    task: Arc<dyn Task>,
    state: Vec<f64>,
    steps: usize,
    done: bool,
}

impl Env {
    pub fn new(task: Arc<dyn Task>) -> Self {
        Self {
            task,
            state: Vec::new(),
            steps: 0,
            done: true,
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        self.task.spec()
    }

    pub fn task(&self) -> &Arc<dyn Task> {
        &self.task
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.reset_with(&mut rng)
    }

    pub fn reset_with(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.state = self.task.initial_state(rng);
        self.steps = 0;
        self.done = false;
        self.state.clone()
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        self.spec().action_space.validate(action)?;
        let out = self.task.transition(&self.state, action);
        self.steps += 1;
        let truncated = !out.terminal && self.steps >= self.spec().max_episode_steps;
        self.done = out.terminal || truncated;
        self.state = out.next_state.clone();
        Ok(StepResult {
            next_state: out.next_state,
            reward: out.reward,
            done: self.done,
            truncated,
            success: out.success,
        })
    }

    pub fn oracle_action(&self, state: &[f64]) -> Action {
        self.task.oracle_action(state)
    }

    pub fn check_state(&self, state: &[f64]) -> Result<()> {
        ensure_dim("state", self.spec().state_dim, state.len())?;
        ensure_finite("state", state)
    }
}

pub fn make_task(name: &str) -> Result<Arc<dyn Task>> {
    Ok(match name {
        "sparse-grid" => Arc::new(SparseGridWorld::new(7, 7)),
        "chain" => Arc::new(ChainMdp::new(25)),
        "point-reach" => Arc::new(PointReach::new()),
        "point-push" => Arc::new(PointPush::new()),
        "two-state" => Arc::new(TwoStateMdp::new()),
        other => return Err(Error::UnknownEnv(other.to_string())),
    })
}

pub fn make_env(name: &str) -> Result<Env> {
    Ok(Env::new(make_task(name)?))
}

/// Runs the oracle from a fresh reset and returns (success, return, steps).
pub fn oracle_rollout(env: &mut Env, seed: u64) -> (bool, f64, usize) {
    let mut state = env.reset(seed);
    let mut total = 0.0;
    loop {
        let action = env.oracle_action(&state);
        let step = env.step(&action).expect("oracle produced an invalid action");
        total += step.reward;
        state = step.next_state;
        if step.done {
            return (step.success, total, env.steps());
        }
    }
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.6}")
}

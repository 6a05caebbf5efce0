use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Action, ActionSpace, EnvSpec, Outcome, RewardRegime, Task};

pub const STAY: usize = 0;
pub const SWITCH: usize = 1;

/// Two states, two actions, no termination. Used to check critics against
/// exact value iteration. `REWARDS[s][a]` is the reward; `stay` keeps the
/// state and `switch` flips it.
#[derive(Debug, Clone)]
pub struct TwoStateMdp {
    spec: EnvSpec,
}

pub const REWARDS: [[f64; 2]; 2] = [[0.0, 0.1], [1.0, 0.0]];

impl Default for TwoStateMdp {
    fn default() -> Self {
        Self::new()
    }
}

impl TwoStateMdp {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "two-state".into(),
                state_dim: 2,
                action_space: ActionSpace::Discrete { n: 2 },
                max_episode_steps: 20,
                reward_regime: RewardRegime::Dense,
            },
        }
    }

    pub fn encode(s: usize) -> Vec<f64> {
        if s == 0 {
            vec![1.0, 0.0]
        } else {
            vec![0.0, 1.0]
        }
    }

    pub fn decode(state: &[f64]) -> usize {
        usize::from(state[1] > state[0])
    }

    pub fn next(s: usize, a: usize) -> usize {
        if a == SWITCH {
            1 - s
        } else {
            s
        }
    }
}

impl Task for TwoStateMdp {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        Self::encode(rng.random_range(0..2))
    }

    fn transition(&self, state: &[f64], action: &Action) -> Outcome {
        let s = Self::decode(state);
        let a = action.as_discrete().unwrap_or(STAY);
        Outcome {
            next_state: Self::encode(Self::next(s, a)),
            reward: REWARDS[s][a],
            terminal: false,
            success: false,
        }
    }

    fn oracle_action(&self, state: &[f64]) -> Action {
        Action::Discrete(if Self::decode(state) == 0 { SWITCH } else { STAY })
    }

    fn description(&self) -> String {
        "Two-state decision process. `stay` keeps the current state and `switch` flips it. \
         Staying in state 1 pays 1, switching out of state 0 pays 0.1."
            .into()
    }

    fn semantic_fields(&self, state: &[f64]) -> Vec<(String, String)> {
        vec![("state".into(), Self::decode(state).to_string())]
    }

    fn action_labels(&self) -> Vec<String> {
        vec!["stay".into(), "switch".into()]
    }
}

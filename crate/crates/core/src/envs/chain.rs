use rand_chacha::ChaCha8Rng;

use super::{Action, ActionSpace, EnvSpec, Outcome, RewardRegime, Task};

pub const BACK: usize = 0;
pub const FORWARD: usize = 1;

/// Hard-exploration chain. The agent always starts at index 0; `forward`
/// advances one cell, `back` retreats one (floored at 0). Reaching the last
/// cell pays 1 and ends the episode.
///
/// State: one-hot position. A scalar position would let a freshly
/// initialized network extrapolate a single preferred action along the whole
/// chain, which solves it without any exploration.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    length: usize,
    spec: EnvSpec,
}

impl ChainMdp {
    pub fn new(length: usize) -> Self {
        assert!(length >= 2, "chain needs at least two cells");
        Self {
            length,
            spec: EnvSpec {
                name: "chain".into(),
                state_dim: length,
                action_space: ActionSpace::Discrete { n: 2 },
                max_episode_steps: 2 * length,
                reward_regime: RewardRegime::SparseEvent,
            },
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn encode(&self, position: usize) -> Vec<f64> {
        let mut s = vec![0.0; self.length];
        s[position.min(self.length - 1)] = 1.0;
        s
    }

    pub fn decode(&self, state: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in state.iter().enumerate().take(self.length) {
            if *v > state[best] {
                best = i;
            }
        }
        best
    }
}

impl Task for ChainMdp {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_state(&self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.encode(0)
    }

    fn transition(&self, state: &[f64], action: &Action) -> Outcome {
        let pos = self.decode(state);
        let next = match action.as_discrete() {
            Some(FORWARD) => (pos + 1).min(self.length - 1),
            _ => pos.saturating_sub(1),
        };
        let success = next == self.length - 1;
        Outcome {
            next_state: self.encode(next),
            reward: if success { 1.0 } else { 0.0 },
            terminal: success,
            success,
        }
    }

    fn oracle_action(&self, _state: &[f64]) -> Action {
        Action::Discrete(FORWARD)
    }

    fn description(&self) -> String {
        format!(
            "Move along a chain of {} cells from cell 0 to cell {}. `forward` advances one \
             cell and `back` retreats one cell. The only reward is 1 for reaching the last cell.",
            self.length,
            self.length - 1
        )
    }

    fn semantic_fields(&self, state: &[f64]) -> Vec<(String, String)> {
        vec![
            ("agent position".into(), self.decode(state).to_string()),
            ("goal position".into(), (self.length - 1).to_string()),
        ]
    }

    fn action_labels(&self) -> Vec<String> {
        vec!["back".into(), "forward".into()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Env;
    use std::sync::Arc;

    #[test]
    fn always_starts_at_zero() {
        let mut env = Env::new(Arc::new(ChainMdp::new(25)));
        for seed in 0..1000 {
            assert_eq!(env.reset(seed), ChainMdp::new(25).encode(0));
        }
    }

    #[test]
    fn oracle_is_forward_and_takes_length_minus_one_steps() {
        let chain = ChainMdp::new(25);
        assert_eq!(chain.oracle_action(&chain.encode(7)), Action::Discrete(FORWARD));
        let mut env = Env::new(Arc::new(chain));
        let (ok, ret, steps) = crate::envs::oracle_rollout(&mut env, 0);
        assert!(ok);
        assert_eq!(ret, 1.0);
        assert_eq!(steps, 24);
    }

    #[test]
    fn back_is_floored_at_start() {
        let chain = ChainMdp::new(5);
        let out = chain.transition(&chain.encode(0), &Action::Discrete(BACK));
        assert_eq!(chain.decode(&out.next_state), 0);
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn encoding_round_trips() {
        let chain = ChainMdp::new(6);
        for p in 0..6 {
            let s = chain.encode(p);
            assert_eq!(s.iter().sum::<f64>(), 1.0);
            assert_eq!(chain.decode(&s), p);
        }
    }
}

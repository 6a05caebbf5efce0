use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{fmt_num, Action, ActionSpace, EnvSpec, Outcome, RewardRegime, Task};

pub const STEP_SCALE: f64 = 0.1;
pub const SUCCESS_RADIUS: f64 = 0.1;
const ARENA: f64 = 1.0;

/// 2-D point mass that must reach a target; reward 1 only on arrival.
///
/// State: `[px, py, tx, ty]`. Actions in `[-1, 1]^2` move the point by
/// `0.1 * action`, clamped to the arena `[-1, 1]^2`.
#[derive(Debug, Clone)]
pub struct PointReach {
    spec: EnvSpec,
}

impl Default for PointReach {
    fn default() -> Self {
        Self::new()
    }
}

impl PointReach {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "point-reach".into(),
                state_dim: 4,
                action_space: ActionSpace::Box {
                    low: vec![-1.0; 2],
                    high: vec![1.0; 2],
                },
                max_episode_steps: 50,
                reward_regime: RewardRegime::SparseEvent,
            },
        }
    }
}

pub(crate) fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

impl Task for PointReach {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let p = (rng.random_range(-ARENA..ARENA), rng.random_range(-ARENA..ARENA));
            let t = (rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8));
            if dist(p, t) >= 0.3 {
                return vec![p.0, p.1, t.0, t.1];
            }
        }
    }

    fn transition(&self, state: &[f64], action: &Action) -> Outcome {
        let a = action.as_continuous().unwrap_or(&[0.0, 0.0]);
        let px = (state[0] + STEP_SCALE * a[0]).clamp(-ARENA, ARENA);
        let py = (state[1] + STEP_SCALE * a[1]).clamp(-ARENA, ARENA);
        let success = dist((px, py), (state[2], state[3])) < SUCCESS_RADIUS;
        Outcome {
            next_state: vec![px, py, state[2], state[3]],
            reward: if success { 1.0 } else { 0.0 },
            terminal: success,
            success,
        }
    }

    /// Proportional controller, saturated at the action bounds.
    fn oracle_action(&self, state: &[f64]) -> Action {
        let gain = 1.0 / STEP_SCALE;
        Action::Continuous(vec![
            (gain * (state[2] - state[0])).clamp(-1.0, 1.0),
            (gain * (state[3] - state[1])).clamp(-1.0, 1.0),
        ])
    }

    fn description(&self) -> String {
        "Move a point in the square [-1, 1] x [-1, 1] to the target. Each action [dx, dy] \
         with components in [-1, 1] moves the point by 0.1 * [dx, dy]. The only reward is 1 \
         when the point comes within 0.1 of the target."
            .into()
    }

    fn semantic_fields(&self, state: &[f64]) -> Vec<(String, String)> {
        vec![
            ("agent position".into(), format!("({}, {})", fmt_num(state[0]), fmt_num(state[1]))),
            ("goal position".into(), format!("({}, {})", fmt_num(state[2]), fmt_num(state[3]))),
        ]
    }
}

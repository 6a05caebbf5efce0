use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{fmt_num, Action, ActionSpace, EnvSpec, Outcome, RewardRegime, Task};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
const LABELS: [&str; 4] = ["up", "down", "left", "right"];

/// Goal-reaching grid with an event reward: 1 on entering the goal cell,
/// 0 otherwise. Every episode starts in cell `(0, 0)`; the goal is drawn
/// uniformly from the remaining cells.
///
/// State: `[ax, ay, gx, gy, gx - ax, gy - ay]`, each divided by `width - 1`
/// (resp. `height - 1`).
#[derive(Debug, Clone)]
pub struct SparseGridWorld {
    width: usize,
    height: usize,
    spec: EnvSpec,
}

impl SparseGridWorld {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 2 && height >= 2, "grid needs at least 2x2 cells");
        Self {
            width,
            height,
            spec: EnvSpec {
                name: "sparse-grid".into(),
                state_dim: 6,
                action_space: ActionSpace::Discrete { n: 4 },
                max_episode_steps: 40,
                reward_regime: RewardRegime::SparseEvent,
            },
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn encode(&self, agent: (usize, usize), goal: (usize, usize)) -> Vec<f64> {
        let sx = (self.width - 1) as f64;
        let sy = (self.height - 1) as f64;
        vec![
            agent.0 as f64 / sx,
            agent.1 as f64 / sy,
            goal.0 as f64 / sx,
            goal.1 as f64 / sy,
            (goal.0 as f64 - agent.0 as f64) / sx,
            (goal.1 as f64 - agent.1 as f64) / sy,
        ]
    }

    /// Recovers `(agent, goal)` cells from a state vector.
    pub fn decode(&self, state: &[f64]) -> ((usize, usize), (usize, usize)) {
        let sx = (self.width - 1) as f64;
        let sy = (self.height - 1) as f64;
        let cell = |v: f64, s: f64, max: usize| ((v * s).round().max(0.0) as usize).min(max - 1);
        (
            (cell(state[0], sx, self.width), cell(state[1], sy, self.height)),
            (cell(state[2], sx, self.width), cell(state[3], sy, self.height)),
        )
    }

    /// Cell reached by taking `action` from `pos`; moves into walls are no-ops.
    pub fn next_cell(&self, pos: (usize, usize), action: usize) -> (usize, usize) {
        let (x, y) = pos;
        match action {
            UP => (x, (y + 1).min(self.height - 1)),
            DOWN => (x, y.saturating_sub(1)),
            LEFT => (x.saturating_sub(1), y),
            RIGHT => ((x + 1).min(self.width - 1), y),
            _ => pos,
        }
    }
}

impl Task for SparseGridWorld {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let goal = rng.random_range(1..self.width * self.height);
        self.encode((0, 0), (goal % self.width, goal / self.width))
    }

    fn transition(&self, state: &[f64], action: &Action) -> Outcome {
        let (agent, goal) = self.decode(state);
        let next = self.next_cell(agent, action.as_discrete().unwrap_or(usize::MAX));
        let success = next == goal;
        Outcome {
            next_state: self.encode(next, goal),
            reward: if success { 1.0 } else { 0.0 },
            terminal: success,
            success,
        }
    }

    /// Greedy Manhattan step: close the horizontal gap first, then vertical.
    fn oracle_action(&self, state: &[f64]) -> Action {
        let ((ax, ay), (gx, gy)) = self.decode(state);
        let a = if gx > ax {
            RIGHT
        } else if gx < ax {
            LEFT
        } else if gy > ay {
            UP
        } else {
            DOWN
        };
        Action::Discrete(a)
    }

    fn description(&self) -> String {
        format!(
            "Navigate an agent on a {}x{} grid to the goal cell. The only reward is 1 when the \
             agent enters the goal cell; every other step gives 0. Coordinates are (x, y) with \
             x growing to the right and y growing upward; `up` increases y. Moving into a wall \
             leaves the agent in place.",
            self.width, self.height
        )
    }

    fn semantic_fields(&self, state: &[f64]) -> Vec<(String, String)> {
        let ((ax, ay), (gx, gy)) = self.decode(state);
        vec![
            ("agent position".into(), format!("({ax}, {ay})")),
            ("goal position".into(), format!("({gx}, {gy})")),
            (
                "normalized offset to goal".into(),
                format!("({}, {})", fmt_num(state[4]), fmt_num(state[5])),
            ),
        ]
    }

    fn action_labels(&self) -> Vec<String> {
        LABELS.iter().map(|s| s.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Env;
    use std::sync::Arc;

    #[test]
    fn reset_places_agent_at_start_and_goal_inside_grid() {
        let grid = SparseGridWorld::new(7, 7);
        let mut env = Env::new(Arc::new(grid.clone()));
        let mut goals = std::collections::HashSet::new();
        for seed in 0..500 {
            let s = env.reset(seed);
            assert!(s[..4].iter().all(|v| (0.0..=1.0).contains(v)));
            let (agent, goal) = grid.decode(&s);
            assert_eq!(agent, (0, 0));
            assert_ne!(agent, goal);
            goals.insert(goal);
        }
        assert_eq!(goals.len(), 48);
    }

    #[test]
    fn entering_goal_pays_one_and_ends() {
        let grid = SparseGridWorld::new(7, 7);
        let mut env = Env::new(Arc::new(grid.clone()));
        env.reset(0);
        env.state = grid.encode((2, 3), (3, 3));
        let s = env.step(&Action::Discrete(RIGHT)).unwrap();
        assert_eq!((s.reward, s.done, s.success, s.truncated), (1.0, true, true, false));
    }

    #[test]
    fn non_goal_moves_pay_nothing_until_timeout() {
        let grid = SparseGridWorld::new(7, 7);
        let mut env = Env::new(Arc::new(grid.clone()));
        env.reset(0);
        env.state = grid.encode((0, 0), (6, 6));
        for i in 1..=40 {
            let s = env.step(&Action::Discrete(DOWN)).unwrap();
            assert_eq!(s.reward, 0.0);
            assert_eq!(s.done, i == 40);
            assert_eq!(s.truncated, i == 40);
        }
    }

    #[test]
    fn oracle_enters_goal_from_adjacent_cells() {
        let grid = SparseGridWorld::new(7, 7);
        let g = (3, 3);
        let cases = [((2, 3), RIGHT), ((4, 3), LEFT), ((3, 2), UP), ((3, 4), DOWN)];
        for (agent, expected) in cases {
            assert_eq!(grid.oracle_action(&grid.encode(agent, g)), Action::Discrete(expected));
        }
    }

    #[test]
    fn decode_inverts_encode() {
        let grid = SparseGridWorld::new(7, 5);
        for ax in 0..7 {
            for gy in 0..5 {
                let s = grid.encode((ax, 4 - gy), (6 - ax, gy));
                assert_eq!(grid.decode(&s), ((ax, 4 - gy), (6 - ax, gy)));
            }
        }
    }
}

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::point_reach::dist;
use super::{fmt_num, Action, ActionSpace, EnvSpec, Outcome, RewardRegime, Task};

pub const STEP_SCALE: f64 = 0.1;
/// Center distance at which the pusher touches the cube.
pub const CONTACT: f64 = 0.1;
pub const SUCCESS_RADIUS: f64 = 0.1;
pub const CUBE_LIMIT: f64 = 1.0;
pub const AGENT_LIMIT: f64 = 1.5;
/// Normalizer of the distance reward: the diameter of the cube's arena.
pub const MAX_DISTANCE: f64 = 2.0 * std::f64::consts::SQRT_2;

/// A pusher moves a cube to a target. Reward each step is
/// `1 - clip(|cube - target| / MAX_DISTANCE, 0, 1)`; the episode ends when the
/// cube is within 0.1 of the target.
///
/// State: `[ax, ay, cx, cy, tx, ty]`.
#[derive(Debug, Clone)]
pub struct PointPush {
    spec: EnvSpec,
}

impl Default for PointPush {
    fn default() -> Self {
        Self::new()
    }
}

pub fn distance_reward(cube: (f64, f64), target: (f64, f64)) -> f64 {
    1.0 - (dist(cube, target) / MAX_DISTANCE).clamp(0.0, 1.0)
}

fn unit(dx: f64, dy: f64) -> (f64, f64) {
    let n = (dx * dx + dy * dy).sqrt();
    if n < 1e-12 {
        (0.0, 0.0)
    } else {
        (dx / n, dy / n)
    }
}

impl PointPush {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: "point-push".into(),
                state_dim: 6,
                action_space: ActionSpace::Box {
                    low: vec![-1.0; 2],
                    high: vec![1.0; 2],
                },
                max_episode_steps: 150,
                reward_regime: RewardRegime::Distance,
            },
        }
    }

    fn move_toward(from: (f64, f64), to: (f64, f64), max_len: f64) -> Action {
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        let len = (dx * dx + dy * dy).sqrt().min(max_len);
        let (ux, uy) = unit(dx, dy);
        let scale = len / STEP_SCALE;
        Action::Continuous(vec![(ux * scale).clamp(-1.0, 1.0), (uy * scale).clamp(-1.0, 1.0)])
    }
}

impl Task for PointPush {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let c = (rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
            let t = (rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
            let a = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if dist(c, t) >= 0.3 && dist(a, c) >= 0.3 {
                return vec![a.0, a.1, c.0, c.1, t.0, t.1];
            }
        }
    }

    fn transition(&self, state: &[f64], action: &Action) -> Outcome {
        let act = action.as_continuous().unwrap_or(&[0.0, 0.0]);
        let ax = (state[0] + STEP_SCALE * act[0]).clamp(-AGENT_LIMIT, AGENT_LIMIT);
        let ay = (state[1] + STEP_SCALE * act[1]).clamp(-AGENT_LIMIT, AGENT_LIMIT);
        let (mut cx, mut cy) = (state[2], state[3]);
        let gap = dist((ax, ay), (cx, cy));
        if gap < CONTACT {
            let (mut nx, mut ny) = unit(cx - ax, cy - ay);
            if nx == 0.0 && ny == 0.0 {
                (nx, ny) = unit(act[0], act[1]);
            }
            cx = (ax + CONTACT * nx).clamp(-CUBE_LIMIT, CUBE_LIMIT);
            cy = (ay + CONTACT * ny).clamp(-CUBE_LIMIT, CUBE_LIMIT);
        }
        let target = (state[4], state[5]);
        let success = dist((cx, cy), target) < SUCCESS_RADIUS;
        Outcome {
            next_state: vec![ax, ay, cx, cy, target.0, target.1],
            reward: distance_reward((cx, cy), target),
            terminal: success,
            success,
        }
    }

    /// Go around the cube to a staging point behind it (relative to the
    /// target), then push along the cube-to-target line.
    fn oracle_action(&self, state: &[f64]) -> Action {
        let agent = (state[0], state[1]);
        let cube = (state[2], state[3]);
        let target = (state[4], state[5]);
        let (ux, uy) = unit(target.0 - cube.0, target.1 - cube.1);
        let (rx, ry) = (agent.0 - cube.0, agent.1 - cube.1);
        let along = rx * ux + ry * uy;
        let perp = (rx - along * ux, ry - along * uy);
        let perp_len = (perp.0 * perp.0 + perp.1 * perp.1).sqrt();

        if along < -0.05 && perp_len < 0.02 {
            // Push: move so the pusher ends just behind the cube's desired spot.
            let remaining = dist(cube, target);
            let goal = (
                cube.0 + ux * (remaining.min(STEP_SCALE) - CONTACT),
                cube.1 + uy * (remaining.min(STEP_SCALE) - CONTACT),
            );
            return Self::move_toward(agent, goal, STEP_SCALE);
        }

        let standoff = CONTACT + 0.06;
        let staging = (cube.0 - standoff * ux, cube.1 - standoff * uy);
        if along < -0.05 && perp_len < 0.08 {
            return Self::move_toward(agent, staging, STEP_SCALE);
        }
        // Circle around: step to a side point if the direct path clips the cube.
        let side = if perp.0 * -uy + perp.1 * ux >= 0.0 { 1.0 } else { -1.0 };
        let (nx, ny) = (-uy * side, ux * side);
        let clearance = CONTACT + 0.12;
        if along >= -0.05 {
            let flank = (cube.0 + clearance * nx - 0.5 * clearance * ux, cube.1 + clearance * ny - 0.5 * clearance * uy);
            if dist(agent, flank) > 0.03 && perp_len < clearance - 0.01 {
                return Self::move_toward(agent, (cube.0 + clearance * nx + along.max(0.0) * ux, cube.1 + clearance * ny + along.max(0.0) * uy), STEP_SCALE);
            }
            return Self::move_toward(agent, flank, STEP_SCALE);
        }
        Self::move_toward(agent, staging, STEP_SCALE)
    }

    fn description(&self) -> String {
        "Push a cube to the target with a point pusher in the plane. Each action [dx, dy] with \
         components in [-1, 1] moves the pusher by 0.1 * [dx, dy]; touching the cube pushes \
         it away from the pusher. Reward each step is 1 minus the normalized cube-to-target \
         distance; the task succeeds when the cube is within 0.1 of the target."
            .into()
    }

    fn semantic_fields(&self, state: &[f64]) -> Vec<(String, String)> {
        vec![
            ("agent position".into(), format!("({}, {})", fmt_num(state[0]), fmt_num(state[1]))),
            ("cube position".into(), format!("({}, {})", fmt_num(state[2]), fmt_num(state[3]))),
            ("goal position".into(), format!("({}, {})", fmt_num(state[4]), fmt_num(state[5]))),
        ]
    }
}

//! Prompt rendering and the answer grammar.
//!
//! Discrete answers are `action: <label>` (a bare index is also accepted);
//! box answers are `action: [v1, v2, ...]`.

use crate::envs::{fmt_num, Action, ActionSpace, Task};

/// Everything the advisor sees about one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorRequest {
    pub env: String,
    pub task_description: String,
    pub state: Vec<f64>,
    pub state_rendering: String,
    pub prior: Action,
    pub prior_action: String,
    pub action_space_constraints: String,
    pub space: ActionSpace,
    pub labels: Vec<String>,
}

impl AdvisorRequest {
    pub fn new(task: &dyn Task, state: &[f64], prior: &Action) -> Self {
        let spec = task.spec();
        let labels = task.action_labels();
        let mut rendering = format!("State vector: {}", render_vector(state));
        for (name, value) in task.semantic_fields(state) {
            rendering.push_str(&format!("\n{}: {value}", capitalize(&name)));
        }
        Self {
            env: spec.name.clone(),
            task_description: task.description(),
            state: state.to_vec(),
            state_rendering: rendering,
            prior: prior.clone(),
            prior_action: render_answer(&spec.action_space, &labels, prior),
            action_space_constraints: render_constraints(&spec.action_space, &labels),
            space: spec.action_space.clone(),
            labels,
        }
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn render_vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn label(labels: &[String], i: usize) -> String {
    labels.get(i).cloned().unwrap_or_else(|| i.to_string())
}

/// An action in the answer grammar, e.g. `action: left` or `action: [0.1, -0.2]`.
pub fn render_answer(space: &ActionSpace, labels: &[String], action: &Action) -> String {
    match (space, action) {
        (ActionSpace::Discrete { .. }, Action::Discrete(i)) => format!("action: {}", label(labels, *i)),
        (_, Action::Continuous(v)) => format!("action: {}", render_vector(v)),
        (_, a) => format!("action: {a}"),
    }
}

fn render_constraints(space: &ActionSpace, labels: &[String]) -> String {
    match space {
        ActionSpace::Discrete { n } => {
            let names: Vec<String> = (0..*n).map(|i| label(labels, i)).collect();
            format!("Choose exactly one of these {n} actions: {}.", names.join(", "))
        }
        ActionSpace::Box { low, high } => {
            let mut s = format!("The action is a vector of {} real numbers.", low.len());
            for (d, (l, h)) in low.iter().zip(high).enumerate() {
                s.push_str(&format!("\nDimension {d}: between {} and {}.", fmt_num(*l), fmt_num(*h)));
            }
            s
        }
    }
}

fn answer_format(space: &ActionSpace) -> &'static str {
    match space {
        ActionSpace::Discrete { .. } => {
            "Reply with a single line of the form `action: <label>`, where <label> is one of the allowed actions."
        }
        ActionSpace::Box { .. } => {
            "Reply with a single line of the form `action: [v1, v2, ...]` with one number per dimension, each inside its bounds."
        }
    }
}

/// Deterministic prompt with task, context and constraint sections.
pub fn render_prompt(req: &AdvisorRequest) -> String {
    format!(
        "## Task\nEnvironment: {}\n{}\n\n## Context\n{}\nPrevious action: {}\n\n## Action-space constraints\n{}\n\n## Answer format\n{}\n",
        req.env,
        req.task_description,
        req.state_rendering,
        req.prior_action,
        req.action_space_constraints,
        answer_format(&req.space)
    )
}

/// Follow-up prompt sent once when a reply does not parse.
pub fn render_repair(prompt: &str, bad_reply: &str) -> String {
    let reply: String = bad_reply.chars().take(200).collect();
    format!(
        "{prompt}\n## Repair\nYour previous reply could not be parsed: {:?}\nAnswer again using exactly the required format.\n",
        reply.trim()
    )
}

/// Extracts an in-space action from a completion. The first line starting
/// with `action:` (case-insensitive) is used.
pub fn parse_answer(text: &str, space: &ActionSpace, labels: &[String]) -> Option<Action> {
    let body = text.lines().find_map(|line| {
        let line = line.trim().trim_matches('`').trim();
        let head = line.get(..7)?;
        head.eq_ignore_ascii_case("action:").then(|| line[7..].trim())
    })?;
    let action = match space {
        ActionSpace::Discrete { .. } => {
            let body = body.trim_matches(|c: char| c == '<' || c == '>' || c == '"' || c == '.');
            labels
                .iter()
                .position(|l| l.eq_ignore_ascii_case(body))
                .or_else(|| body.parse::<usize>().ok())
                .map(Action::Discrete)?
        }
        ActionSpace::Box { .. } => {
            let inner = body.strip_prefix('[')?.split(']').next()?;
            let values: Option<Vec<f64>> = inner.split(',').map(|p| p.trim().parse::<f64>().ok()).collect();
            Action::Continuous(values?)
        }
    };
    space.contains(&action).then_some(action)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make_task;

    fn labels4() -> Vec<String> {
        ["up", "down", "left", "right"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_labels_and_indices() {
        let space = ActionSpace::discrete(4).unwrap();
        let l = labels4();
        assert_eq!(parse_answer("action: left", &space, &l), Some(Action::Discrete(2)));
        assert_eq!(parse_answer("Sure.\nAction: RIGHT\n", &space, &l), Some(Action::Discrete(3)));
        assert_eq!(parse_answer("action: 2", &space, &l), Some(Action::Discrete(2)));
        assert_eq!(parse_answer("action: 9", &space, &l), None);
        assert_eq!(parse_answer("go left", &space, &l), None);
        assert_eq!(parse_answer("action: jump", &space, &l), None);
    }

    #[test]
    fn parses_vectors_within_bounds() {
        let space = ActionSpace::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(
            parse_answer("action: [0.5, -0.25]", &space, &[]),
            Some(Action::Continuous(vec![0.5, -0.25]))
        );
        assert_eq!(parse_answer("action: [1.5, 0]", &space, &[]), None);
        assert_eq!(parse_answer("action: [0.5]", &space, &[]), None);
        assert_eq!(parse_answer("action: [a, b]", &space, &[]), None);
        assert_eq!(parse_answer("action: 0.5, 0.5", &space, &[]), None);
    }

    #[test]
    fn prompt_is_deterministic_and_lists_labels() {
        let task = make_task("sparse-grid").unwrap();
        let state = vec![0.0, 0.5, 1.0, 1.0, 1.0, 0.5];
        let req = AdvisorRequest::new(task.as_ref(), &state, &Action::Discrete(0));
        let a = render_prompt(&req);
        assert_eq!(a, render_prompt(&req));
        assert!(a.contains("## Task") && a.contains("## Context") && a.contains("## Action-space constraints"));
        assert!(a.contains("Choose exactly one of these 4 actions: up, down, left, right."));
        assert!(a.contains("Previous action: action: up"));
        assert!(a.contains("State vector: [0.000000, 0.500000, 1.000000, 1.000000, 1.000000, 0.500000]"));
    }

    #[test]
    fn answers_round_trip_through_the_grammar() {
        for name in crate::envs::ENV_NAMES {
            let task = make_task(name).unwrap();
            let space = &task.spec().action_space;
            let labels = task.action_labels();
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
            for _ in 0..20 {
                let a = space.sample(&mut rng);
                let text = render_answer(space, &labels, &a);
                let back = parse_answer(&text, space, &labels).unwrap();
                match (&a, &back) {
                    (Action::Continuous(x), Action::Continuous(y)) => {
                        x.iter().zip(y).for_each(|(p, q)| assert!((p - q).abs() <= 5e-7))
                    }
                    _ => assert_eq!(a, back),
                }
            }
        }
    }
}

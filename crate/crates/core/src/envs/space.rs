use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSpace {
    Discrete { n: usize },
    Box { low: Vec<f64>, high: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn as_discrete(&self) -> Option<usize> {
        match self {
            Action::Discrete(a) => Some(*a),
            Action::Continuous(_) => None,
        }
    }

    pub fn as_continuous(&self) -> Option<&[f64]> {
        match self {
            Action::Continuous(v) => Some(v),
            Action::Discrete(_) => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Discrete(a) => write!(f, "{a}"),
            Action::Continuous(v) => {
                write!(f, "[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x:.6}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl ActionSpace {
    pub fn discrete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("discrete space needs n >= 2, got {n}")));
        }
        Ok(ActionSpace::Discrete { n })
    }

    pub fn boxed(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.is_empty() || low.len() != high.len() {
            return Err(Error::Config("box bounds must be non-empty and equal length".into()));
        }
        if low.iter().zip(&high).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::Config("box bounds need finite low < high".into()));
        }
        Ok(ActionSpace::Box { low, high })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, ActionSpace::Discrete { .. })
    }

    /// Number of discrete actions, or the box dimension.
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete { n } => *n,
            ActionSpace::Box { low, .. } => low.len(),
        }
    }

    pub fn contains(&self, action: &Action) -> bool {
        match (self, action) {
            (ActionSpace::Discrete { n }, Action::Discrete(a)) => a < n,
            (ActionSpace::Box { low, high }, Action::Continuous(v)) => {
                v.len() == low.len()
                    && v.iter()
                        .zip(low.iter().zip(high))
                        .all(|(x, (l, h))| x.is_finite() && *x >= *l && *x <= *h)
            }
            _ => false,
        }
    }

    pub fn validate(&self, action: &Action) -> Result<()> {
        if self.contains(action) {
            Ok(())
        } else {
            Err(Error::InvalidAction(format!("{action} is outside {self:?}")))
        }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Action {
        match self {
            ActionSpace::Discrete { n } => Action::Discrete(rng.random_range(0..*n)),
            ActionSpace::Box { low, high } => Action::Continuous(
                low.iter().zip(high).map(|(l, h)| rng.random_range(*l..=*h)).collect(),
            ),
        }
    }

    pub fn clip(&self, values: &[f64]) -> Vec<f64> {
        match self {
            ActionSpace::Box { low, high } => values
                .iter()
                .zip(low.iter().zip(high))
                .map(|(v, (l, h))| v.clamp(*l, *h))
                .collect(),
            ActionSpace::Discrete { .. } => values.to_vec(),
        }
    }
}

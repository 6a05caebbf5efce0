//! Replay buffer of transitions and the guidance buffer of advisor pairs.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Action, ActionSpace};
use crate::error::{Error, Result};
use crate::sac::policy::Squash;

/// One environment step `(s, a, r, s', d)`. `terminal` is true termination;
/// `truncated` marks timeouts, which critics bootstrap through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
    pub truncated: bool,
}

impl Transition {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Fixed-capacity ring buffer.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
    space: ActionSpace,
    state_dim: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, space: ActionSpace) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
            space,
            state_dim,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.state.len() != self.state_dim || t.next_state.len() != self.state_dim {
            return Err(Error::InvalidTransition("state dimension".into()));
        }
        if !(t.reward.is_finite()
            && t.state.iter().all(|v| v.is_finite())
            && t.next_state.iter().all(|v| v.is_finite()))
        {
            return Err(Error::InvalidTransition("non-finite field".into()));
        }
        if !self.space.contains(&t.action) {
            return Err(Error::InvalidTransition(format!("action {} outside space", t.action)));
        }
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Index into `items` of the i-th most recent transition (0 = newest).
    fn recent_index(&self, i: usize) -> usize {
        (self.cursor + self.capacity - 1 - i) % self.capacity
    }

    /// The `min(k, len)` most recent transitions, newest first.
    pub fn recent(&self, k: usize) -> Vec<Transition> {
        (0..k.min(self.len()))
            .map(|i| self.items[self.recent_index(i)].clone())
            .collect()
    }

    /// Uniform sampling with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<Transition>> {
        Ok(self
            .sample_indices(batch, rng)?
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect())
    }

    pub fn sample_refs<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        Ok(self
            .sample_indices(batch, rng)?
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }

    fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = self.len();
        Ok((0..batch).map(|_| rng.random_range(0..n)).collect())
    }

    /// Oldest-to-newest iteration.
    pub fn iter_chronological(&self) -> impl Iterator<Item = &Transition> {
        let n = self.len();
        (0..n).rev().map(move |i| &self.items[self.recent_index(i)])
    }

    /// Writes one JSON record per line, oldest first. Debugging aid only.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for t in self.iter_chronological() {
            serde_json::to_writer(&mut out, t)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Advisor-labelled `(s, a_llm)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidancePair {
    pub state: Vec<f64>,
    pub action: Action,
}

/// A stored pair plus, for box spaces, its pre-squash latent computed once on
/// ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceEntry {
    pub pair: GuidancePair,
    pub latent: Option<Vec<f64>>,
}

/// Multiset of guidance pairs; duplicates are kept.
#[derive(Debug, Clone)]
pub struct GuidanceBuffer {
    space: ActionSpace,
    squash: Option<Squash>,
    capacity: Option<usize>,
    entries: Vec<GuidanceEntry>,
    cursor: usize,
    clamped: usize,
}

impl GuidanceBuffer {
    pub fn new(space: ActionSpace, capacity: Option<usize>) -> Self {
        let squash = match &space {
            ActionSpace::Box { low, high } => Some(Squash::new(low.clone(), high.clone())),
            ActionSpace::Discrete { .. } => None,
        };
        Self {
            space,
            squash,
            capacity: capacity.filter(|c| *c > 0),
            entries: Vec::new(),
            cursor: 0,
            clamped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    /// Number of box actions that sat on (or beyond) the squashing boundary
    /// and had to be pulled into the open interval.
    pub fn clamped_count(&self) -> usize {
        self.clamped
    }

    pub fn entries(&self) -> &[GuidanceEntry] {
        &self.entries
    }

    pub fn push(&mut self, pair: GuidancePair) -> Result<()> {
        if !self.space.contains(&pair.action) {
            return Err(Error::InvalidAction(format!(
                "advisor action {} outside {:?}",
                pair.action, self.space
            )));
        }
        if pair.state.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTransition("non-finite guidance state".into()));
        }
        let latent = match (&self.squash, &pair.action) {
            (Some(squash), Action::Continuous(a)) => {
                let (u, clamped) = squash.to_latent(a);
                if clamped {
                    self.clamped += 1;
                }
                Some(u)
            }
            _ => None,
        };
        let entry = GuidanceEntry { pair, latent };
        match self.capacity {
            Some(cap) if self.entries.len() >= cap => {
                self.entries[self.cursor] = entry;
                self.cursor = (self.cursor + 1) % cap;
            }
            _ => self.entries.push(entry),
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&GuidanceEntry>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = self.len();
        Ok((0..batch).map(|_| &self.entries[rng.random_range(0..n)]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(id: usize) -> Transition {
        Transition {
            state: vec![id as f64],
            action: Action::Discrete(id % 2),
            reward: 0.0,
            next_state: vec![id as f64 + 1.0],
            terminal: false,
            truncated: false,
        }
    }

    fn ids(v: &[Transition]) -> Vec<usize> {
        v.iter().map(|t| t.state[0] as usize).collect()
    }

    fn replay(cap: usize) -> ReplayBuffer {
        ReplayBuffer::new(cap, 1, ActionSpace::Discrete { n: 2 }).unwrap()
    }

    #[test]
    fn ring_evicts_oldest() {
        let mut buf = replay(3);
        for i in 1..=4 {
            buf.push(tr(i)).unwrap();
        }
        assert_eq!(buf.len(), 3);
        let chrono: Vec<usize> = buf.iter_chronological().map(|t| t.state[0] as usize).collect();
        assert_eq!(chrono, vec![2, 3, 4]);
    }

    #[test]
    fn recent_orders_newest_first_and_saturates() {
        let mut buf = replay(10);
        assert!(buf.recent(3).is_empty());
        for i in 1..=5 {
            buf.push(tr(i)).unwrap();
        }
        assert_eq!(ids(&buf.recent(3)), vec![5, 4, 3]);
        assert_eq!(ids(&buf.recent(1)), vec![5]);
        assert_eq!(ids(&buf.recent(50)), vec![5, 4, 3, 2, 1]);
    }

    #[test]
    fn full_capacity_without_eviction() {
        let mut buf = replay(10_000);
        for i in 0..10_000 {
            buf.push(tr(i)).unwrap();
        }
        assert_eq!(buf.len(), 10_000);
        assert_eq!(buf.iter_chronological().next().unwrap().state[0], 0.0);
    }

    #[test]
    fn rejects_invalid_transitions() {
        let mut buf = replay(4);
        let mut bad = tr(0);
        bad.reward = f64::NAN;
        assert!(buf.push(bad).is_err());
        let mut bad = tr(0);
        bad.action = Action::Discrete(5);
        assert!(buf.push(bad).is_err());
        let mut bad = tr(0);
        bad.state = vec![0.0, 1.0];
        assert!(buf.push(bad).is_err());
        assert!(buf.is_empty());
    }

    #[test]
    fn sampling_single_item_and_determinism() {
        let mut buf = replay(8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(buf.sample(2, &mut rng), Err(Error::EmptyBuffer)));
        buf.push(tr(7)).unwrap();
        assert_eq!(ids(&buf.sample(5, &mut rng).unwrap()), vec![7; 5]);
        for i in 0..8 {
            buf.push(tr(i)).unwrap();
        }
        let a = ids(&buf.sample(20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap());
        let b = ids(&buf.sample(20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_uniform_chi_square() {
        let mut buf = replay(10);
        for i in 0..10 {
            buf.push(tr(i)).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 10];
        for t in buf.sample(100_000, &mut rng).unwrap() {
            counts[t.state[0] as usize] += 1;
        }
        let expected = 10_000.0;
        let chi2: f64 = counts.iter().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
        // 99th percentile of chi-square with 9 degrees of freedom.
        assert!(chi2 < 21.666, "chi2 = {chi2}");
    }

    #[test]
    fn guidance_validates_actions() {
        let mut g = GuidanceBuffer::new(ActionSpace::Discrete { n: 4 }, None);
        let err = g.push(GuidancePair {
            state: vec![0.0],
            action: Action::Discrete(7),
        });
        assert!(matches!(err, Err(Error::InvalidAction(_))));
        assert!(g.is_empty());
        let pair = GuidancePair {
            state: vec![0.5],
            action: Action::Discrete(2),
        };
        g.push(pair.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(g.sample(1, &mut rng).unwrap()[0].pair, pair);
    }

    #[test]
    fn guidance_caches_latents_and_counts_clamps() {
        let space = ActionSpace::Box {
            low: vec![-1.0, -1.0],
            high: vec![1.0, 1.0],
        };
        let mut g = GuidanceBuffer::new(space, None);
        g.push(GuidancePair {
            state: vec![0.0],
            action: Action::Continuous(vec![0.0, 0.5]),
        })
        .unwrap();
        let u = g.entries()[0].latent.clone().unwrap();
        assert_eq!(u[0], 0.0);
        assert!((u[1] - 0.5f64.atanh()).abs() < 1e-12);
        assert_eq!(g.clamped_count(), 0);
        g.push(GuidancePair {
            state: vec![0.0],
            action: Action::Continuous(vec![1.0, -1.0]),
        })
        .unwrap();
        assert_eq!(g.clamped_count(), 1);
        assert!(g.entries()[1].latent.as_ref().unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn three_batches_of_five_hundred() {
        let mut g = GuidanceBuffer::new(ActionSpace::Discrete { n: 4 }, None);
        for batch in 0..3 {
            for i in 0..500 {
                g.push(GuidancePair {
                    state: vec![batch as f64, i as f64],
                    action: Action::Discrete(i % 4),
                })
                .unwrap();
            }
        }
        assert_eq!(g.len(), 1500);
    }

    proptest! {
        #[test]
        fn recent_matches_shadow_list(cap in 1usize..40, ops in proptest::collection::vec((any::<bool>(), 1usize..60), 1..300)) {
            let mut buf = replay(cap);
            let mut shadow: Vec<usize> = Vec::new();
            let mut next = 0;
            for (is_push, k) in ops {
                if is_push {
                    buf.push(tr(next)).unwrap();
                    shadow.push(next);
                    next += 1;
                } else {
                    let expected: Vec<usize> = shadow.iter().rev().take(k.min(cap)).copied().collect();
                    prop_assert_eq!(ids(&buf.recent(k)), expected);
                }
            }
        }
    }
}

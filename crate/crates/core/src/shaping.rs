//! Gated behavior cloning on advisor actions and the cutoff actor loss.
//!
//! A guidance pair contributes `-log pi(a_llm | s)` only while its gate is
//! open: for discrete actions, when the advice differs from every
//! critic-greedy action; for box actions, when the advice (in pre-squash
//! space) lies outside the policy's `kappa`-ellipsoid. The gate is a hard
//! indicator and carries no gradient.

use serde::{Deserialize, Serialize};

use crate::buffers::GuidanceEntry;
use crate::envs::Action;
use crate::error::{ensure_dim, Error, Result};
use crate::numerics::Gradients;
use crate::sac::policy::{clamp_log_std, gaussian_log_density, log_softmax, softmax};
use crate::sac::{ActorLoss, Head, SacAgent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapingConfig {
    /// Guidance weight.
    pub lambda: f64,
    /// Last global step (inclusive) at which the shaping term is applied.
    pub cutoff: u64,
    /// Acceptance radius of the continuous gate, in standard deviations.
    pub kappa: f64,
    /// Guidance pairs sampled per actor update.
    pub guidance_batch: usize,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            cutoff: 6_000,
            kappa: 1.0,
            guidance_batch: 64,
        }
    }
}

impl ShapingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be a finite value >= 0".into()));
        }
        if self.cutoff == 0 {
            return Err(Error::Config("cutoff must be >= 1".into()));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config("kappa must be positive".into()));
        }
        if self.guidance_batch == 0 {
            return Err(Error::Config("guidance_batch must be positive".into()));
        }
        Ok(())
    }

    /// The cutoff indicator `1[t <= N_s]`.
    pub fn shaping_active(&self, t: u64) -> bool {
        t <= self.cutoff
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateDiagnostic {
    /// Lowest-index critic-greedy action.
    Greedy(usize),
    /// Squared Mahalanobis distance in pre-squash space.
    Distance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateResult {
    pub active: bool,
    pub diagnostic: GateDiagnostic,
}

/// Discrete gate: open unless `a_llm` attains the maximum of the twin-critic
/// minimum.
pub fn gate_discrete(agent: &SacAgent, s: &[f64], a_llm: usize) -> Result<GateResult> {
    let q = agent.min_q_values(s)?;
    if a_llm >= q.len() {
        return Err(Error::InvalidAction(format!("advisor action {a_llm} outside 0..{}", q.len())));
    }
    let greedy = crate::sac::policy::argmax(&q);
    Ok(GateResult {
        active: q[a_llm] < q[greedy],
        diagnostic: GateDiagnostic::Greedy(greedy),
    })
}

/// Continuous gate on the pre-squash advice `u_llm`: open when
/// `sum_d (u_d - mu_d)^2 / sigma_d^2 > kappa^2`.
pub fn gate_continuous(agent: &SacAgent, s: &[f64], u_llm: &[f64], kappa: f64) -> Result<GateResult> {
    let (mean, log_std) = agent.gaussian_params(s)?;
    ensure_dim("advisor latent", mean.len(), u_llm.len())?;
    let d2: f64 = u_llm
        .iter()
        .zip(mean.iter().zip(&log_std))
        .map(|(u, (m, ls))| {
            let z = (u - m) / ls.exp();
            z * z
        })
        .sum();
    Ok(GateResult {
        active: d2 > kappa * kappa,
        diagnostic: GateDiagnostic::Distance(d2),
    })
}

/// Gate for a stored guidance entry, dispatching on the agent's head.
pub fn gate(agent: &SacAgent, entry: &GuidanceEntry, kappa: f64) -> Result<GateResult> {
    match (agent.head(), &entry.pair.action, &entry.latent) {
        (Head::Discrete { .. }, Action::Discrete(a), _) => gate_discrete(agent, &entry.pair.state, *a),
        (Head::Continuous { .. }, Action::Continuous(_), Some(u)) => {
            gate_continuous(agent, &entry.pair.state, u, kappa)
        }
        _ => Err(Error::InvalidAction("guidance entry does not match the agent's action head".into())),
    }
}

/// `-log pi(a_llm | s)`, with its gradient scaled by `weight` added into `grads`.
fn neg_log_prob_into(agent: &SacAgent, entry: &GuidanceEntry, weight: f64, grads: &mut Gradients) -> Result<f64> {
    let actor = agent.actor();
    let trace = actor.forward_trace(&entry.pair.state)?;
    let out = trace.output();
    let (nll, upstream) = match (agent.head(), &entry.pair.action, &entry.latent) {
        (Head::Discrete { .. }, Action::Discrete(a), _) => {
            let lp = log_softmax(out);
            let mut up = softmax(out);
            up[*a] -= 1.0;
            up.iter_mut().for_each(|g| *g *= weight);
            (-lp[*a], up)
        }
        (Head::Continuous { squash }, Action::Continuous(_), Some(u)) => {
            let d = squash.dim();
            let mut up = vec![0.0; 2 * d];
            let mut log_density = 0.0;
            for i in 0..d {
                let (ls, pass) = clamp_log_std(out[d + i]);
                let sd = ls.exp();
                let z = (u[i] - out[i]) / sd;
                log_density += gaussian_log_density(z, ls);
                up[i] = -z / sd * weight;
                if pass {
                    up[d + i] = (1.0 - z * z) * weight;
                }
            }
            (-(log_density - squash.log_abs_det(u)), up)
        }
        _ => return Err(Error::InvalidAction("guidance entry does not match the agent's action head".into())),
    };
    actor.backprop(&trace, &upstream, grads)?;
    Ok(nll)
}

/// Ungated behavior-cloning loss: mean of `-log pi(a_llm | s)` over the batch.
pub fn bc_loss(agent: &SacAgent, batch: &[&GuidanceEntry]) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let inv_b = 1.0 / batch.len() as f64;
    let exec = agent.config().execution;
    exec.try_fold_chunks(
        batch,
        || (0.0, Gradients::zeros_like(agent.actor())),
        |(loss, grads), entry| -> Result<()> {
            *loss += neg_log_prob_into(agent, entry, inv_b, grads)? * inv_b;
            Ok(())
        },
        |a, b| {
            a.0 += b.0;
            a.1.add_assign(&b.1);
        },
    )
}

#[derive(Debug, Clone)]
pub struct ShapingLoss {
    pub loss: f64,
    pub grads: Gradients,
    pub active: usize,
    pub batch: usize,
}

impl ShapingLoss {
    pub fn activation_rate(&self) -> f64 {
        if self.batch == 0 {
            0.0
        } else {
            self.active as f64 / self.batch as f64
        }
    }
}

/// `lambda * mean_batch g(s, a_llm) * (-log pi(a_llm | s))`.
pub fn shaping_loss(agent: &SacAgent, cfg: &ShapingConfig, batch: &[&GuidanceEntry]) -> Result<ShapingLoss> {
    if batch.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let scale = cfg.lambda / batch.len() as f64;
    let exec = agent.config().execution;
    let (loss, grads, active) = exec.try_fold_chunks(
        batch,
        || (0.0, Gradients::zeros_like(agent.actor()), 0usize),
        |(loss, grads, active), entry| -> Result<()> {
            if gate(agent, entry, cfg.kappa)?.active {
                *active += 1;
                if cfg.lambda > 0.0 {
                    *loss += neg_log_prob_into(agent, entry, scale, grads)? * scale;
                }
            }
            Ok(())
        },
        |a, b| {
            a.0 += b.0;
            a.1.add_assign(&b.1);
            a.2 += b.2;
        },
    )?;
    Ok(ShapingLoss {
        loss,
        grads,
        active,
        batch: batch.len(),
    })
}

/// Actor loss for one update: the baseline loss plus, while `t <= N_s`, the
/// gated shaping term.
#[derive(Debug, Clone)]
pub struct ActorStep {
    pub baseline: ActorLoss,
    pub shaping: Option<ShapingLoss>,
}

impl ActorStep {
    pub fn loss(&self) -> f64 {
        match &self.shaping {
            Some(s) if s.active > 0 && s.loss != 0.0 => self.baseline.loss + s.loss,
            _ => self.baseline.loss,
        }
    }

    /// Combined gradients. Without an open gate this is the baseline gradient
    /// itself, bit for bit.
    pub fn grads(&self) -> Gradients {
        let mut g = self.baseline.grads.clone();
        if let Some(s) = &self.shaping {
            if s.active > 0 && !s.grads.is_zero() {
                g.add_assign(&s.grads);
            }
        }
        g
    }
}

pub fn actor_loss(
    agent: &SacAgent,
    cfg: &ShapingConfig,
    t: u64,
    states: &[&[f64]],
    noise: &[Vec<f64>],
    guidance: &[&GuidanceEntry],
) -> Result<ActorStep> {
    if t == 0 {
        return Err(Error::Config("global steps start at 1".into()));
    }
    let baseline = agent.baseline_policy_loss(states, noise)?;
    let shaping = if cfg.shaping_active(t) && !guidance.is_empty() {
        Some(shaping_loss(agent, cfg, guidance)?)
    } else {
        None
    };
    Ok(ActorStep { baseline, shaping })
}

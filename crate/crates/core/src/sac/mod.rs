//! Soft actor-critic for discrete and box action spaces.
//!
//! Twin critics are combined with an elementwise minimum. Discrete critics
//! output every action-value in one pass and the discrete policy loss is an
//! exact expectation over actions; the continuous loss uses one
//! reparameterized sample per state through a `tanh` squash.

pub mod policy;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::buffers::Transition;
use crate::envs::{Action, ActionSpace};
use crate::error::{ensure_dim, Error, Result};
use crate::exec::Execution;
use crate::numerics::{polyak_update, Activation, Adam, AdamConfig, Checkpoint, DenseNet, Gradients};

use policy::{clamp_log_std, gaussian_log_density, log_softmax, softmax, PolicyDistribution, Squash};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub gamma: f64,
    pub tau: f64,
    /// Multiplies rewards inside critic targets. The critic networks stay in
    /// unit scale: every action-value the agent reports or optimizes against
    /// is `reward_scale` times the raw network output.
    pub reward_scale: f64,
    /// Fixed entropy temperature, or the initial value when `auto_alpha` is on.
    pub alpha: f64,
    pub auto_alpha: bool,
    /// Defaults to `-dim` for boxes and `0.5 ln n` for discrete spaces.
    pub target_entropy: Option<f64>,
    pub batch_size: usize,
    pub actor_optimizer: AdamConfig,
    pub critic_optimizer: AdamConfig,
    pub alpha_optimizer: AdamConfig,
    pub execution: Execution,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            gamma: 0.99,
            tau: 0.005,
            reward_scale: 1.0,
            alpha: 0.2,
            auto_alpha: false,
            target_entropy: None,
            batch_size: 64,
            actor_optimizer: AdamConfig::default(),
            critic_optimizer: AdamConfig::default(),
            alpha_optimizer: AdamConfig::default(),
            execution: Execution::Sequential,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.hidden.contains(&0) {
            return bad("hidden sizes must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Discrete { n: usize },
    Continuous { squash: Squash },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Stochastic,
    Deterministic,
}

/// Loss value, actor gradients and the batch mean of `log pi` (for the
/// temperature update and entropy diagnostics).
#[derive(Debug, Clone)]
pub struct ActorLoss {
    pub loss: f64,
    pub grads: Gradients,
    pub mean_log_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticStats {
    pub loss1: f64,
    pub loss2: f64,
    pub mean_target: f64,
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    config: SacConfig,
    head: Head,
    state_dim: usize,
    actor: DenseNet,
    critic1: DenseNet,
    critic2: DenseNet,
    target1: DenseNet,
    target2: DenseNet,
    actor_opt: Adam,
    critic1_opt: Adam,
    critic2_opt: Adam,
    alpha: f64,
    log_alpha: f64,
    alpha_opt: Adam,
    target_entropy: f64,
}

struct CriticAcc {
    g1: Gradients,
    g2: Gradients,
    loss1: f64,
    loss2: f64,
}

struct ActorAcc {
    grads: Gradients,
    loss: f64,
    log_prob: f64,
}

impl ActorAcc {
    fn merge(&mut self, other: ActorAcc) {
        self.grads.add_assign(&other.grads);
        self.loss += other.loss;
        self.log_prob += other.log_prob;
    }
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, space: &ActionSpace, config: SacConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let head = match space {
            ActionSpace::Discrete { n } => Head::Discrete { n: *n },
            ActionSpace::Box { low, high } => Head::Continuous {
                squash: Squash::new(low.clone(), high.clone()),
            },
        };
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&config.hidden);
            s.push(output);
            s
        };
        let (actor_sizes, critic_sizes) = match &head {
            Head::Discrete { n } => (sizes(state_dim, *n), sizes(state_dim, *n)),
            Head::Continuous { squash } => (
                sizes(state_dim, 2 * squash.dim()),
                sizes(state_dim + squash.dim(), 1),
            ),
        };
        let actor = DenseNet::new(&actor_sizes, config.activation, rng)?;
        let critic1 = DenseNet::new(&critic_sizes, config.activation, rng)?;
        let critic2 = DenseNet::new(&critic_sizes, config.activation, rng)?;
        let target_entropy = config.target_entropy.unwrap_or(match &head {
            Head::Discrete { n } => 0.5 * (*n as f64).ln(),
            Head::Continuous { squash } => -(squash.dim() as f64),
        });
        Ok(Self {
            actor_opt: Adam::for_net(config.actor_optimizer, &actor),
            critic1_opt: Adam::for_net(config.critic_optimizer, &critic1),
            critic2_opt: Adam::for_net(config.critic_optimizer, &critic2),
            alpha_opt: Adam::new(config.alpha_optimizer, &[1]),
            alpha: config.alpha,
            log_alpha: config.alpha.ln(),
            target1: critic1.clone(),
            target2: critic2.clone(),
            actor,
            critic1,
            critic2,
            head,
            state_dim,
            target_entropy,
            config,
        })
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn head(&self) -> &Head {
        &self.head
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.head, Head::Discrete { .. })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn target_entropy(&self) -> f64 {
        self.target_entropy
    }

    pub fn set_execution(&mut self, execution: Execution) {
        self.config.execution = execution;
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut DenseNet {
        &mut self.actor
    }

    pub fn critics(&self) -> (&DenseNet, &DenseNet) {
        (&self.critic1, &self.critic2)
    }

    pub fn critics_mut(&mut self) -> (&mut DenseNet, &mut DenseNet) {
        (&mut self.critic1, &mut self.critic2)
    }

    pub fn targets(&self) -> (&DenseNet, &DenseNet) {
        (&self.target1, &self.target2)
    }

    fn check_state(&self, s: &[f64]) -> Result<()> {
        ensure_dim("agent state", self.state_dim, s.len())
    }

    /// Latent mean and clamped log-std for a box policy.
    pub fn gaussian_params(&self, s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let Head::Continuous { squash } = &self.head else {
            return Err(Error::Config("gaussian parameters need a box action space".into()));
        };
        self.check_state(s)?;
        let out = self.actor.forward(s)?;
        let d = squash.dim();
        let log_std = out[d..].iter().map(|r| clamp_log_std(*r).0).collect();
        Ok((out[..d].to_vec(), log_std))
    }

    pub fn policy(&self, s: &[f64]) -> Result<PolicyDistribution> {
        self.check_state(s)?;
        match &self.head {
            Head::Discrete { .. } => Ok(PolicyDistribution::categorical(&self.actor.forward(s)?)),
            Head::Continuous { squash } => {
                let (mean, log_std) = self.gaussian_params(s)?;
                Ok(PolicyDistribution::SquashedGaussian {
                    mean,
                    log_std,
                    squash: squash.clone(),
                })
            }
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, s: &[f64], mode: ActMode, rng: &mut R) -> Result<Action> {
        match (self.policy(s)?, mode) {
            (PolicyDistribution::Categorical { probs, .. }, ActMode::Deterministic) => {
                Ok(Action::Discrete(policy::argmax(&probs)))
            }
            (PolicyDistribution::Categorical { probs, .. }, ActMode::Stochastic) => {
                let r: f64 = rng.random();
                let mut cum = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    cum += p;
                    if r < cum {
                        return Ok(Action::Discrete(i));
                    }
                }
                Ok(Action::Discrete(probs.len() - 1))
            }
            (PolicyDistribution::SquashedGaussian { mean, squash, .. }, ActMode::Deterministic) => {
                Ok(Action::Continuous(squash.to_action(&mean)))
            }
            (dist @ PolicyDistribution::SquashedGaussian { .. }, ActMode::Stochastic) => {
                let (u, _) = dist.sample_latent(rng).expect("gaussian policy");
                let PolicyDistribution::SquashedGaussian { squash, .. } = &dist else {
                    unreachable!()
                };
                Ok(Action::Continuous(squash.to_action(&u)))
            }
        }
    }

    /// Both critics' action-values for every discrete action.
    pub fn q_values(&self, s: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if !self.is_discrete() {
            return Err(Error::Config("q_values needs a discrete action space".into()));
        }
        self.check_state(s)?;
        let c = self.config.reward_scale;
        let scaled = |v: Vec<f64>| v.into_iter().map(|q| c * q).collect();
        Ok((scaled(self.critic1.forward(s)?), scaled(self.critic2.forward(s)?)))
    }

    /// Elementwise minimum of the twin critics over all discrete actions.
    pub fn min_q_values(&self, s: &[f64]) -> Result<Vec<f64>> {
        let (q1, q2) = self.q_values(s)?;
        Ok(q1.iter().zip(&q2).map(|(a, b)| a.min(*b)).collect())
    }

    pub fn q_pair(&self, s: &[f64], a: &Action) -> Result<(f64, f64)> {
        self.check_state(s)?;
        match (&self.head, a) {
            (Head::Discrete { n }, Action::Discrete(i)) if i < n => {
                let (q1, q2) = self.q_values(s)?;
                Ok((q1[*i], q2[*i]))
            }
            (Head::Continuous { squash }, Action::Continuous(v)) if v.len() == squash.dim() => {
                let input = [s, v.as_slice()].concat();
                let c = self.config.reward_scale;
                Ok((c * self.critic1.forward(&input)?[0], c * self.critic2.forward(&input)?[0]))
            }
            _ => Err(Error::InvalidAction(format!("{a} does not match the agent's action head"))),
        }
    }

    pub fn min_q(&self, s: &[f64], a: &Action) -> Result<f64> {
        let (q1, q2) = self.q_pair(s, a)?;
        Ok(q1.min(q2))
    }

    /// Standard-normal noise for reparameterized sampling, one row per state.
    /// Empty rows for discrete agents.
    pub fn sample_noise<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let dim = match &self.head {
            Head::Discrete { .. } => 0,
            Head::Continuous { squash } => squash.dim(),
        };
        (0..count)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect()
    }

    /// Soft TD targets `c r + gamma (1 - terminal) E_{a'}[min Q_targ(s',a') - alpha log pi(a'|s')]`.
    /// Timeouts bootstrap; only true termination cuts the tail.
    pub fn critic_targets(&self, batch: &[&Transition], noise: &[Vec<f64>]) -> Result<Vec<f64>> {
        ensure_dim("critic target noise", batch.len(), noise.len())?;
        let alpha = self.alpha;
        let gamma = self.config.gamma;
        let scale = self.config.reward_scale;
        let items: Vec<(&&Transition, &Vec<f64>)> = batch.iter().zip(noise).collect();
        let targets = self.config.execution.map(&items, |(t, eps)| -> Result<f64> {
            if t.terminal {
                return Ok(scale * t.reward);
            }
            let s2 = &t.next_state;
            let v = match &self.head {
                Head::Discrete { .. } => {
                    let logits = self.actor.forward(s2)?;
                    let p = softmax(&logits);
                    let lp = log_softmax(&logits);
                    let qt1 = self.target1.forward(s2)?;
                    let qt2 = self.target2.forward(s2)?;
                    p.iter()
                        .zip(&lp)
                        .zip(qt1.iter().zip(&qt2))
                        .map(|((pa, lpa), (a, b))| pa * (scale * a.min(*b) - alpha * lpa))
                        .sum::<f64>()
                }
                Head::Continuous { squash } => {
                    let (u, logp) = self.latent_sample(s2, eps)?;
                    let input = [s2.as_slice(), &squash.to_action(&u)].concat();
                    let q = self.target1.forward(&input)?[0].min(self.target2.forward(&input)?[0]);
                    scale * q - alpha * logp
                }
            };
            Ok(scale * t.reward + gamma * v)
        });
        let targets = targets.into_iter().collect::<Result<Vec<f64>>>()?;
        if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
            return Err(Error::NonFinite(format!(
                "critic target for batch item {i} (reward {}, alpha {alpha})",
                batch[i].reward
            )));
        }
        Ok(targets)
    }

    /// `u = mean + std * eps` and `log pi(squash(u) | s)`.
    fn latent_sample(&self, s: &[f64], eps: &[f64]) -> Result<(Vec<f64>, f64)> {
        let Head::Continuous { squash } = &self.head else {
            unreachable!("latent sample on a discrete head")
        };
        let out = self.actor.forward(s)?;
        let d = squash.dim();
        let mut logp = 0.0;
        let u: Vec<f64> = (0..d)
            .map(|i| {
                let (ls, _) = clamp_log_std(out[d + i]);
                logp += gaussian_log_density(eps[i], ls);
                out[i] + ls.exp() * eps[i]
            })
            .collect();
        logp -= squash.log_abs_det(&u);
        Ok((u, logp))
    }

    /// Critic losses `0.5 * mean (Q_i(s,a) - y)^2 / c^2` (`c` the reward scale,
    /// so the loss lives in network units) and their gradients, given targets.
    pub fn critic_gradients(&self, batch: &[&Transition], targets: &[f64]) -> Result<(Gradients, Gradients, f64, f64)> {
        ensure_dim("critic targets", batch.len(), targets.len())?;
        let inv_b = 1.0 / batch.len() as f64;
        let inv_c = 1.0 / self.config.reward_scale;
        let items: Vec<(&&Transition, &f64)> = batch.iter().zip(targets).collect();
        let acc = self.config.execution.try_fold_chunks(
            &items,
            || CriticAcc {
                g1: Gradients::zeros_like(&self.critic1),
                g2: Gradients::zeros_like(&self.critic2),
                loss1: 0.0,
                loss2: 0.0,
            },
            |acc, (t, y)| -> Result<()> {
                let (input, index) = match (&self.head, &t.action) {
                    (Head::Discrete { .. }, Action::Discrete(a)) => (t.state.clone(), *a),
                    (Head::Continuous { .. }, Action::Continuous(a)) => ([t.state.as_slice(), a].concat(), 0),
                    _ => return Err(Error::InvalidTransition("action kind does not match agent".into())),
                };
                for (net, grads, loss) in [
                    (&self.critic1, &mut acc.g1, &mut acc.loss1),
                    (&self.critic2, &mut acc.g2, &mut acc.loss2),
                ] {
                    let trace = net.forward_trace(&input)?;
                    let err = trace.output()[index] - **y * inv_c;
                    *loss += 0.5 * err * err * inv_b;
                    let mut upstream = vec![0.0; net.output_dim()];
                    upstream[index] = err * inv_b;
                    net.backprop(&trace, &upstream, grads)?;
                }
                Ok(())
            },
            |a, b| {
                a.g1.add_assign(&b.g1);
                a.g2.add_assign(&b.g2);
                a.loss1 += b.loss1;
                a.loss2 += b.loss2;
            },
        )?;
        Ok((acc.g1, acc.g2, acc.loss1, acc.loss2))
    }

    /// One soft TD step on both critics followed by Polyak averaging of the
    /// targets. `noise` feeds the next-state action samples (box spaces).
    pub fn critic_update(&mut self, batch: &[&Transition], noise: &[Vec<f64>]) -> Result<CriticStats> {
        if batch.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let targets = self.critic_targets(batch, noise)?;
        let (g1, g2, loss1, loss2) = self.critic_gradients(batch, &targets)?;
        self.critic1_opt.apply(&mut self.critic1, &g1)?;
        self.critic2_opt.apply(&mut self.critic2, &g2)?;
        polyak_update(&mut self.target1, &self.critic1, self.config.tau)?;
        polyak_update(&mut self.target2, &self.critic2, self.config.tau)?;
        Ok(CriticStats {
            loss1,
            loss2,
            mean_target: targets.iter().sum::<f64>() / targets.len() as f64,
        })
    }

    /// Baseline policy loss. Discrete: `mean_s sum_a pi(a|s) (alpha log pi(a|s) - Q(s,a))`.
    /// Continuous: `mean_s [alpha log pi(a|s) - Q(s,a)]` with
    /// `a = squash(mean + std * noise)`. `Q` is the twin-critic minimum; only
    /// actor gradients are produced.
    pub fn baseline_policy_loss(&self, states: &[&[f64]], noise: &[Vec<f64>]) -> Result<ActorLoss> {
        if states.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        ensure_dim("policy noise", states.len(), noise.len())?;
        let inv_b = 1.0 / states.len() as f64;
        let alpha = self.alpha;
        let items: Vec<(&&[f64], &Vec<f64>)> = states.iter().zip(noise).collect();
        let acc = self.config.execution.try_fold_chunks(
            &items,
            || ActorAcc {
                grads: Gradients::zeros_like(&self.actor),
                loss: 0.0,
                log_prob: 0.0,
            },
            |acc, (s, eps)| -> Result<()> {
                self.check_state(s)?;
                match &self.head {
                    Head::Discrete { .. } => self.discrete_policy_term(s, alpha, inv_b, acc),
                    Head::Continuous { squash } => self.continuous_policy_term(s, eps, squash, alpha, inv_b, acc),
                }
            },
            ActorAcc::merge,
        )?;
        Ok(ActorLoss {
            loss: acc.loss,
            grads: acc.grads,
            mean_log_prob: acc.log_prob,
        })
    }

    fn discrete_policy_term(&self, s: &[f64], alpha: f64, inv_b: f64, acc: &mut ActorAcc) -> Result<()> {
        let trace = self.actor.forward_trace(s)?;
        let p = softmax(trace.output());
        let lp = log_softmax(trace.output());
        let q1 = self.critic1.forward(s)?;
        let q2 = self.critic2.forward(s)?;
        let c = self.config.reward_scale;
        let f: Vec<f64> = lp
            .iter()
            .zip(q1.iter().zip(&q2))
            .map(|(l, (a, b))| alpha * l - c * a.min(*b))
            .collect();
        let per_state: f64 = p.iter().zip(&f).map(|(pa, fa)| pa * fa).sum();
        // d/dz_k sum_a p_a f_a = p_k (f_k - sum_a p_a f_a); the alpha-log term's own
        // derivative cancels in expectation.
        let upstream: Vec<f64> = p.iter().zip(&f).map(|(pk, fk)| pk * (fk - per_state) * inv_b).collect();
        self.actor.backprop(&trace, &upstream, &mut acc.grads)?;
        acc.loss += per_state * inv_b;
        acc.log_prob += p.iter().zip(&lp).map(|(a, b)| a * b).sum::<f64>() * inv_b;
        Ok(())
    }

    fn continuous_policy_term(
        &self,
        s: &[f64],
        eps: &[f64],
        squash: &Squash,
        alpha: f64,
        inv_b: f64,
        acc: &mut ActorAcc,
    ) -> Result<()> {
        let d = squash.dim();
        ensure_dim("policy noise row", d, eps.len())?;
        let trace = self.actor.forward_trace(s)?;
        let out = trace.output();
        let mut u = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        let mut pass = Vec::with_capacity(d);
        let mut logp = 0.0;
        for i in 0..d {
            let (ls, ok) = clamp_log_std(out[d + i]);
            let sd = ls.exp();
            logp += gaussian_log_density(eps[i], ls);
            u.push(out[i] + sd * eps[i]);
            std.push(sd);
            pass.push(ok);
        }
        logp -= squash.log_abs_det(&u);
        let action = squash.to_action(&u);
        let input = [s, action.as_slice()].concat();
        let t1 = self.critic1.forward_trace(&input)?;
        let t2 = self.critic2.forward_trace(&input)?;
        let (q, net, trace_q) = if t1.output()[0] <= t2.output()[0] {
            (t1.output()[0], &self.critic1, &t1)
        } else {
            (t2.output()[0], &self.critic2, &t2)
        };
        let c = self.config.reward_scale;
        let q = c * q;
        let dq = net.input_gradient(trace_q, &[c])?;
        let dq_da = &dq[self.state_dim..];
        let mut upstream = vec![0.0; 2 * d];
        for i in 0..d {
            let th = u[i].tanh();
            // alpha * d/du[-ln(1 - tanh^2 u)] - dQ/da * da/du
            let dl_du = alpha * 2.0 * th - dq_da[i] * squash.scale()[i] * (1.0 - th * th);
            upstream[i] = dl_du * inv_b;
            if pass[i] {
                upstream[d + i] = (-alpha + dl_du * std[i] * eps[i]) * inv_b;
            }
        }
        self.actor.backprop(&trace, &upstream, &mut acc.grads)?;
        acc.loss += (alpha * logp - q) * inv_b;
        acc.log_prob += logp * inv_b;
        Ok(())
    }

    pub fn apply_actor_gradients(&mut self, grads: &Gradients) -> Result<()> {
        self.actor_opt.apply(&mut self.actor, grads)
    }

    /// Temperature step when auto-tuning; a no-op for fixed alpha.
    pub fn update_temperature(&mut self, mean_log_prob: f64) -> Result<()> {
        if !self.config.auto_alpha {
            return Ok(());
        }
        let grad = -self.alpha * (mean_log_prob + self.target_entropy);
        let mut la = [self.log_alpha];
        self.alpha_opt.apply_slices(&mut [&mut la[..]], &[&[grad]])?;
        self.log_alpha = la[0];
        self.alpha = la[0].exp();
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::default();
        ckpt.put_net("actor", &self.actor);
        ckpt.put_net("critic1", &self.critic1);
        ckpt.put_net("critic2", &self.critic2);
        ckpt.put_net("target1", &self.target1);
        ckpt.put_net("target2", &self.target2);
        ckpt.insert("log_alpha", vec![1], vec![self.log_alpha]);
        ckpt.insert("alpha", vec![1], vec![self.alpha]);
        ckpt
    }

    /// Restores network parameters and temperature; optimizer moments restart.
    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        let nets = [
            ckpt.get_net("actor")?,
            ckpt.get_net("critic1")?,
            ckpt.get_net("critic2")?,
            ckpt.get_net("target1")?,
            ckpt.get_net("target2")?,
        ];
        let current = [&self.actor, &self.critic1, &self.critic2, &self.target1, &self.target2];
        if nets.iter().zip(current).any(|(a, b)| !a.same_architecture(b)) {
            return Err(Error::Checkpoint("network shapes do not match this agent".into()));
        }
        let [actor, c1, c2, t1, t2] = nets;
        self.actor = actor;
        self.critic1 = c1;
        self.critic2 = c2;
        self.target1 = t1;
        self.target2 = t2;
        self.log_alpha = ckpt.tensor("log_alpha")?.data[0];
        self.alpha = ckpt.tensor("alpha")?.data[0];
        Ok(())
    }
}

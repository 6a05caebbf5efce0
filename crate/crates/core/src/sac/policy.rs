//! Policy distributions: categorical over logits, and a diagonal Gaussian
//! in latent space pushed through `tanh` and an affine map onto the box.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Largest |tanh(u)| allowed when inverting the squash.
pub const SQUASH_LIMIT: f64 = 1.0 - 1e-6;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn entropy(probs: &[f64], log_probs: &[f64]) -> f64 {
    -probs.iter().zip(log_probs).map(|(p, lp)| if *p > 0.0 { p * lp } else { 0.0 }).sum::<f64>()
}

/// Lowest index among maximal entries.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 - tanh(u)^2)` without cancellation for large |u|.
#[inline]
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Clamps a raw log-std output; the boolean reports whether the clamp was
/// inactive (so the gradient passes through).
#[inline]
pub fn clamp_log_std(raw: f64) -> (f64, bool) {
    if raw < LOG_STD_MIN {
        (LOG_STD_MIN, false)
    } else if raw > LOG_STD_MAX {
        (LOG_STD_MAX, false)
    } else {
        (raw, true)
    }
}

/// Log-density of `u` under `N(mean, std^2)`, given `z = (u - mean) / std`.
#[inline]
pub fn gaussian_log_density(z: f64, log_std: f64) -> f64 {
    -0.5 * z * z - log_std - HALF_LN_2PI
}

/// Affine `tanh` squash from latent space onto a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Squash {
    low: Vec<f64>,
    high: Vec<f64>,
    center: Vec<f64>,
    scale: Vec<f64>,
    log_scale_sum: f64,
}

impl Squash {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Self {
        let center: Vec<f64> = low.iter().zip(&high).map(|(l, h)| 0.5 * (l + h)).collect();
        let scale: Vec<f64> = low.iter().zip(&high).map(|(l, h)| 0.5 * (h - l)).collect();
        let log_scale_sum = scale.iter().map(|s| s.ln()).sum();
        Self {
            low,
            high,
            center,
            scale,
            log_scale_sum,
        }
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn to_action(&self, latent: &[f64]) -> Vec<f64> {
        latent
            .iter()
            .zip(self.center.iter().zip(&self.scale))
            .zip(self.low.iter().zip(&self.high))
            .map(|((u, (c, s)), (l, h))| (c + s * u.tanh()).clamp(*l, *h))
            .collect()
    }

    /// Inverse squash. Actions on or outside the boundary are pulled to
    /// `tanh(u) = ±SQUASH_LIMIT`; the flag reports whether that happened.
    pub fn to_latent(&self, action: &[f64]) -> (Vec<f64>, bool) {
        let mut clamped = false;
        let u = action
            .iter()
            .zip(self.center.iter().zip(&self.scale))
            .map(|(a, (c, s))| {
                let y = (a - c) / s;
                let y = if y.abs() >= SQUASH_LIMIT || !y.is_finite() {
                    clamped = true;
                    y.clamp(-SQUASH_LIMIT, SQUASH_LIMIT)
                } else {
                    y
                };
                y.atanh()
            })
            .collect();
        (u, clamped)
    }

    /// `ln |da/du|` summed over dimensions.
    pub fn log_abs_det(&self, latent: &[f64]) -> f64 {
        self.log_scale_sum + latent.iter().map(|u| log_one_minus_tanh_sq(*u)).sum::<f64>()
    }
}

/// The action distribution produced by the actor for one state.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyDistribution {
    Categorical { probs: Vec<f64>, log_probs: Vec<f64> },
    SquashedGaussian { mean: Vec<f64>, log_std: Vec<f64>, squash: Squash },
}

impl PolicyDistribution {
    pub fn categorical(logits: &[f64]) -> Self {
        PolicyDistribution::Categorical {
            probs: softmax(logits),
            log_probs: log_softmax(logits),
        }
    }

    /// Entropy of a categorical policy; `None` for Gaussians (use a sampled
    /// estimate instead).
    pub fn entropy(&self) -> Option<f64> {
        match self {
            PolicyDistribution::Categorical { probs, log_probs } => Some(entropy(probs, log_probs)),
            PolicyDistribution::SquashedGaussian { .. } => None,
        }
    }

    /// Draws a latent sample and its log-density under the squashed policy.
    pub fn sample_latent<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(Vec<f64>, f64)> {
        match self {
            PolicyDistribution::SquashedGaussian { mean, log_std, squash } => {
                let mut logp = 0.0;
                let u: Vec<f64> = mean
                    .iter()
                    .zip(log_std)
                    .map(|(m, ls)| {
                        let eps: f64 = rng.sample(StandardNormal);
                        logp += gaussian_log_density(eps, *ls);
                        m + ls.exp() * eps
                    })
                    .collect();
                logp -= squash.log_abs_det(&u);
                Some((u, logp))
            }
            PolicyDistribution::Categorical { .. } => None,
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::net::{DenseNet, Gradients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam state for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            first: shapes.iter().map(|n| vec![0.0; *n]).collect(),
            second: shapes.iter().map(|n| vec![0.0; *n]).collect(),
        }
    }

    pub fn for_net(config: AdamConfig, net: &DenseNet) -> Self {
        Self::new(config, &net.param_shapes())
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn shapes(&self) -> Vec<usize> {
        self.first.iter().map(Vec::len).collect()
    }

    pub fn apply(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        let mut params = net.param_slices_mut();
        self.apply_slices(&mut params, &grads.slices())
    }

    /// One Adam step. Nothing is modified if the gradient or any resulting
    /// parameter is non-finite.
    pub fn apply_slices(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.first.len()
            || grads.len() != self.first.len()
            || params
                .iter()
                .zip(grads)
                .zip(&self.first)
                .any(|((p, g), m)| p.len() != m.len() || g.len() != m.len())
        {
            return Err(Error::Architecture("optimizer state does not match parameters".into()));
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("gradient passed to optimizer".into()));
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let step = self.step + 1;
        let bias1 = 1.0 - beta1.powi(step as i32);
        let bias2 = 1.0 - beta2.powi(step as i32);

        let mut first = self.first.clone();
        let mut second = self.second.clone();
        let mut updated: Vec<Vec<f64>> = Vec::with_capacity(params.len());
        for (((p, g), m), v) in params.iter().zip(grads).zip(first.iter_mut()).zip(second.iter_mut()) {
            let mut out = Vec::with_capacity(p.len());
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                let next = p[i] - learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                if !next.is_finite() {
                    return Err(Error::NonFinite("parameter after optimizer step".into()));
                }
                out.push(next);
            }
            updated.push(out);
        }
        for (p, u) in params.iter_mut().zip(updated) {
            p.copy_from_slice(&u);
        }
        self.first = first;
        self.second = second;
        self.step = step;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut adam = Adam::new(AdamConfig::default(), &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let before = p.clone();
        adam.apply_slices(&mut [p.as_mut_slice()], &[&[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(p, before);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn descends_on_square() {
        let cfg = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &[1]);
        let mut w = vec![1.0];
        let g = 2.0 * w[0];
        adam.apply_slices(&mut [w.as_mut_slice()], &[&[g]]).unwrap();
        assert!(w[0] < 1.0 && w[0] > 0.0);
    }

    #[test]
    fn converges_on_convex_quadratic() {
        // f(w) = (w0 - 3)^2 + 4 (w1 + 1)^2, minimizer (3, -1).
        let cfg = AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &[2]);
        let mut w = vec![0.0, 0.0];
        for _ in 0..500 {
            let g = [2.0 * (w[0] - 3.0), 8.0 * (w[1] + 1.0)];
            adam.apply_slices(&mut [w.as_mut_slice()], &[&g]).unwrap();
        }
        assert!((w[0] - 3.0).abs() < 1e-3, "{w:?}");
        assert!((w[1] + 1.0).abs() < 1e-3, "{w:?}");
    }

    #[test]
    fn rejects_non_finite_gradient_without_mutation() {
        let mut adam = Adam::new(AdamConfig::default(), &[2]);
        let mut p = vec![1.0, 1.0];
        let err = adam.apply_slices(&mut [p.as_mut_slice()], &[&[f64::NAN, 0.0]]);
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(adam.step_count(), 0);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut adam = Adam::new(AdamConfig::default(), &[2]);
        let mut p = vec![1.0, 1.0, 1.0];
        assert!(adam.apply_slices(&mut [p.as_mut_slice()], &[&[0.0, 0.0, 0.0]]).is_err());
    }
}

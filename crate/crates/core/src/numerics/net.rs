use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// One affine layer. `weights` is row-major with shape `[outputs, inputs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.biases).map(|(row, b)| {
            let mut acc = *b;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            acc
        }));
    }
}

/// Fully connected network. Hidden layers share one activation; the output
/// layer is always linear.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
    hidden: Activation,
}

/// Per-layer activations recorded by [`DenseNet::forward_trace`].
/// `activations[0]` is the input and the last entry is the output.
#[derive(Debug, Clone)]
pub struct Trace {
    pub activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl DenseNet {
    /// Uniform fan-in initialization: every weight and bias of a layer with
    /// `n` inputs is drawn from `U(-1/sqrt(n), 1/sqrt(n))`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, rng: &mut R) -> Result<Self> {
        validate_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = 1.0 / (inputs as f64).sqrt();
                let mut layer = Layer::zeros(inputs, outputs);
                for v in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                    *v = rng.random_range(-bound..bound);
                }
                layer
            })
            .collect();
        Ok(Self { layers, hidden })
    }

    pub fn from_layers(layers: Vec<Layer>, hidden: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Architecture("network needs at least one layer".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.inputs == 0 || layer.outputs == 0 {
                return Err(Error::Architecture(format!("layer {i} has a zero dimension")));
            }
            ensure_dim("layer weights", layer.inputs * layer.outputs, layer.weights.len())?;
            ensure_dim("layer biases", layer.outputs, layer.biases.len())?;
            ensure_finite("layer parameters", &layer.weights)?;
            ensure_finite("layer parameters", &layer.biases)?;
            if i > 0 {
                ensure_dim("layer chaining", layers[i - 1].outputs, layer.inputs)?;
            }
        }
        Ok(Self { layers, hidden })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn same_architecture(&self, other: &DenseNet) -> bool {
        self.hidden == other.hidden && self.layer_sizes() == other.layer_sizes()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if i != last {
                for v in next.iter_mut() {
                    *v = self.hidden.apply(*v);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        ensure_finite("network output", &cur)?;
        Ok(cur)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.affine(&activations[i], &mut out);
            if i != last {
                for v in out.iter_mut() {
                    *v = self.hidden.apply(*v);
                }
            }
            activations.push(out);
        }
        ensure_finite("network output", activations.last().unwrap())?;
        Ok(Trace { activations })
    }

    /// Backpropagates `upstream = dL/d(output)` through a recorded trace,
    /// adding parameter gradients into `grads`. Returns `dL/d(input)`.
    pub fn backprop(&self, trace: &Trace, upstream: &[f64], grads: &mut Gradients) -> Result<Vec<f64>> {
        self.check_grads_shape(grads)?;
        self.backprop_inner(trace, upstream, Some(grads))
    }

    /// `dL/d(input)` only; parameter gradients are not formed.
    pub fn input_gradient(&self, trace: &Trace, upstream: &[f64]) -> Result<Vec<f64>> {
        self.backprop_inner(trace, upstream, None)
    }

    fn backprop_inner(&self, trace: &Trace, upstream: &[f64], mut grads: Option<&mut Gradients>) -> Result<Vec<f64>> {
        ensure_dim("upstream gradient", self.output_dim(), upstream.len())?;
        ensure_dim("trace depth", self.layers.len() + 1, trace.activations.len())?;
        let mut delta = upstream.to_vec();
        let last = self.layers.len() - 1;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if l != last {
                for (d, a) in delta.iter_mut().zip(&trace.activations[l + 1]) {
                    *d *= self.hidden.derivative_from_output(*a);
                }
            }
            if let Some(grads) = grads.as_deref_mut() {
                let input = &trace.activations[l];
                let (gw, gb) = (&mut grads.weights[l], &mut grads.biases[l]);
                for (o, d) in delta.iter().enumerate() {
                    gb[o] += d;
                    if *d != 0.0 {
                        let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                        for (g, xi) in row.iter_mut().zip(input) {
                            *g += d * xi;
                        }
                    }
                }
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                if *d != 0.0 {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// Gradients of `upstream · f(x)` with respect to parameters and input.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let trace = self.forward_trace(x)?;
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backprop(&trace, upstream, &mut grads)?;
        ensure_finite("parameter gradient", &grads.flatten())?;
        Ok((grads, input_grad))
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
            .collect()
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        self.param_slices().iter().map(|s| s.len()).collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        ensure_dim("network input", self.input_dim(), x.len())?;
        ensure_finite("network input", x)
    }

    fn check_grads_shape(&self, grads: &Gradients) -> Result<()> {
        if grads.weights.len() != self.layers.len()
            || self
                .layers
                .iter()
                .zip(grads.weights.iter().zip(&grads.biases))
                .any(|(l, (w, b))| l.weights.len() != w.len() || l.biases.len() != b.len())
        {
            return Err(Error::Architecture("gradient shapes do not match the network".into()));
        }
        Ok(())
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Architecture("need at least input and output sizes".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Architecture("layer sizes must be positive".into()));
    }
    Ok(())
}

/// Parameter-shaped gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            for v in s.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| *v == 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Soft target update: `target <- (1 - tau) * target + tau * online`.
pub fn polyak_update(target: &mut DenseNet, online: &DenseNet, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("polyak rate {tau} outside (0, 1]")));
    }
    if !target.same_architecture(online) {
        return Err(Error::Architecture("polyak update between different architectures".into()));
    }
    let keep = 1.0 - tau;
    for (t, o) in target.param_slices_mut().into_iter().zip(online.param_slices()) {
        for (tv, ov) in t.iter_mut().zip(o) {
            *tv = keep * *tv + tau * ov;
        }
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::net::{Activation, DenseNet, Layer};

pub const CHECKPOINT_FORMAT: &str = "varl-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Named tensors plus string metadata, stored as JSON. Floats are written in
/// shortest round-trip form, so save/load is lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    pub tensors: BTreeMap<String, Tensor>,
}

impl Default for Checkpoint {
    fn default() -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            meta: BTreeMap::new(),
            tensors: BTreeMap::new(),
        }
    }
}

impl Checkpoint {
    pub fn insert(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        self.tensors.insert(name.into(), Tensor { shape, data });
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))
    }

    pub fn put_net(&mut self, prefix: &str, net: &DenseNet) {
        self.meta
            .insert(format!("{prefix}.activation"), net.hidden_activation().name().into());
        self.meta
            .insert(format!("{prefix}.layers"), net.layers().len().to_string());
        for (i, layer) in net.layers().iter().enumerate() {
            self.insert(
                format!("{prefix}.{i}.weight"),
                vec![layer.outputs, layer.inputs],
                layer.weights.clone(),
            );
            self.insert(format!("{prefix}.{i}.bias"), vec![layer.outputs], layer.biases.clone());
        }
    }

    pub fn get_net(&self, prefix: &str) -> Result<DenseNet> {
        let meta = |key: &str| {
            self.meta
                .get(&format!("{prefix}.{key}"))
                .ok_or_else(|| Error::Checkpoint(format!("missing metadata `{prefix}.{key}`")))
        };
        let activation = Activation::from_name(meta("activation")?)
            .ok_or_else(|| Error::Checkpoint("unknown activation".into()))?;
        let count: usize = meta("layers")?
            .parse()
            .map_err(|_| Error::Checkpoint("bad layer count".into()))?;
        let mut layers = Vec::with_capacity(count);
        for i in 0..count {
            let w = self.tensor(&format!("{prefix}.{i}.weight"))?;
            let b = self.tensor(&format!("{prefix}.{i}.bias"))?;
            if w.shape.len() != 2 || w.shape[0] * w.shape[1] != w.data.len() {
                return Err(Error::Checkpoint(format!("weight {i} has inconsistent shape")));
            }
            if b.shape != [w.shape[0]] || b.data.len() != w.shape[0] {
                return Err(Error::Checkpoint(format!("bias {i} has inconsistent shape")));
            }
            layers.push(Layer {
                inputs: w.shape[1],
                outputs: w.shape[0],
                weights: w.data.clone(),
                biases: b.data.clone(),
            });
        }
        DenseNet::from_layers(layers, activation)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format `{}`", ckpt.format)));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", ckpt.version)));
        }
        for (name, t) in &ckpt.tensors {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::Checkpoint(format!("tensor `{name}` shape/data mismatch")));
            }
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn net_round_trips_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = DenseNet::new(&[5, 7, 3], Activation::Relu, &mut rng).unwrap();
        let mut ckpt = Checkpoint::default();
        ckpt.put_net("actor", &net);
        let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
        let restored = back.get_net("actor").unwrap();
        assert_eq!(restored, net);
        for (a, b) in restored.flatten().iter().zip(net.flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_wrong_header() {
        let mut ckpt = Checkpoint::default();
        ckpt.version = 99;
        let text = serde_json::to_string(&ckpt).unwrap();
        assert!(Checkpoint::from_json(&text).is_err());
        ckpt.version = CHECKPOINT_VERSION;
        ckpt.format = "other".into();
        let text = serde_json::to_string(&ckpt).unwrap();
        assert!(Checkpoint::from_json(&text).is_err());
    }

    #[test]
    fn rejects_inconsistent_tensor() {
        let mut ckpt = Checkpoint::default();
        ckpt.insert("x", vec![2, 2], vec![1.0, 2.0, 3.0]);
        assert!(Checkpoint::from_json(&ckpt.to_json().unwrap()).is_err());
    }
}

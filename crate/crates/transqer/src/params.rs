//! Named parameter store with gradient slots, Adam state, and a versioned
//! checkpoint format (base64 little-endian buffers; round-trips bit-exact
//! at the stored precision).

use crate::tensor::{Elem, Tensor};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const CHECKPOINT_SCHEMA: &str = "transqer-ckpt/1";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema {0:?}")]
    Schema(String),
    #[error("dtype mismatch: file has {file}, expected {expected}")]
    Dtype { file: String, expected: String },
    #[error("corrupt tensor {0:?}")]
    Corrupt(String),
}

#[derive(Debug, Clone)]
struct Entry<E> {
    value: Tensor<E>,
    grad: Tensor<E>,
    m: Tensor<E>,
    v: Tensor<E>,
}

/// All learnable tensors, keyed by name. Iteration order is the sorted key
/// order, so updates and serialization are deterministic.
#[derive(Debug, Clone)]
pub struct ParamSet<E> {
    entries: BTreeMap<String, Entry<E>>,
    step: u64,
}

impl<E: Elem> Default for ParamSet<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Elem> ParamSet<E> {
    pub fn new() -> Self {
        ParamSet {
            entries: BTreeMap::new(),
            step: 0,
        }
    }

    pub fn insert(&mut self, name: &str, value: Tensor<E>) {
        let shape = value.shape().to_vec();
        let prev = self.entries.insert(
            name.to_string(),
            Entry {
                value,
                grad: Tensor::zeros(&shape),
                m: Tensor::zeros(&shape),
                v: Tensor::zeros(&shape),
            },
        );
        assert!(prev.is_none(), "duplicate parameter {name}");
    }

    pub fn value(&self, name: &str) -> &Tensor<E> {
        &self.entries.get(name).unwrap_or_else(|| panic!("unknown parameter {name}")).value
    }

    pub fn value_mut(&mut self, name: &str) -> &mut Tensor<E> {
        &mut self
            .entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .value
    }

    pub fn grad(&self, name: &str) -> &Tensor<E> {
        &self.entries.get(name).unwrap_or_else(|| panic!("unknown parameter {name}")).grad
    }

    pub fn accumulate_grad(&mut self, name: &str, g: &Tensor<E>) {
        let e = self
            .entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        assert_eq!(e.grad.shape(), g.shape(), "gradient shape mismatch for {name}");
        for (dst, &src) in e.grad.data_mut().iter_mut().zip(g.data()) {
            *dst += src;
        }
    }

    pub fn zero_grads(&mut self) {
        for e in self.entries.values_mut() {
            e.grad.fill(E::zero());
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn num_params(&self) -> usize {
        self.entries.values().map(|e| e.value.numel()).sum()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Hard copy of all values from `src` (target-network sync). Optimizer
    /// state is left untouched.
    pub fn copy_values_from(&mut self, src: &ParamSet<E>) {
        for (name, e) in &mut self.entries {
            let sv = src.value(name);
            e.value.data_mut().copy_from_slice(sv.data());
        }
    }

    /// Standard Adam with bias correction. Gradients are consumed (zeroed).
    pub fn adam_step(&mut self, lr: f64, betas: (f64, f64), eps: f64) {
        self.step += 1;
        let (b1, b2) = (E::from_f64(betas.0), E::from_f64(betas.1));
        let one = E::one();
        let lr = E::from_f64(lr);
        let eps = E::from_f64(eps);
        let bc1 = one - E::from_f64(betas.0.powi(self.step as i32));
        let bc2 = one - E::from_f64(betas.1.powi(self.step as i32));
        for e in self.entries.values_mut() {
            for i in 0..e.value.numel() {
                let g = e.grad.data()[i];
                let m = b1 * e.m.data()[i] + (one - b1) * g;
                let v = b2 * e.v.data()[i] + (one - b2) * g * g;
                e.m.data_mut()[i] = m;
                e.v.data_mut()[i] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                let upd = lr * m_hat / (v_hat.sqrt() + eps);
                e.value.data_mut()[i] = e.value.data()[i] - upd;
            }
            e.grad.fill(E::zero());
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    shape: Vec<usize>,
    data: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    schema: String,
    dtype: String,
    step: u64,
    /// Opaque network configuration stored alongside the weights.
    config: serde_json::Value,
    tensors: BTreeMap<String, TensorRecord>,
    adam_m: BTreeMap<String, TensorRecord>,
    adam_v: BTreeMap<String, TensorRecord>,
}

fn encode<E: Elem>(t: &Tensor<E>) -> TensorRecord {
    TensorRecord {
        shape: t.shape().to_vec(),
        data: B64.encode(E::to_le_bytes(t.data())),
    }
}

fn decode<E: Elem>(name: &str, rec: &TensorRecord) -> Result<Tensor<E>, CheckpointError> {
    let bytes = B64
        .decode(&rec.data)
        .map_err(|_| CheckpointError::Corrupt(name.to_string()))?;
    let data =
        E::from_le_bytes(&bytes).ok_or_else(|| CheckpointError::Corrupt(name.to_string()))?;
    if data.len() != rec.shape.iter().product::<usize>() {
        return Err(CheckpointError::Corrupt(name.to_string()));
    }
    Ok(Tensor::from_vec(&rec.shape, data))
}

impl<E: Elem> ParamSet<E> {
    pub fn save(&self, path: &Path, config: &serde_json::Value) -> Result<(), CheckpointError> {
        let file = CheckpointFile {
            schema: CHECKPOINT_SCHEMA.to_string(),
            dtype: E::DTYPE.to_string(),
            step: self.step,
            config: config.clone(),
            tensors: self.entries.iter().map(|(k, e)| (k.clone(), encode(&e.value))).collect(),
            adam_m: self.entries.iter().map(|(k, e)| (k.clone(), encode(&e.m))).collect(),
            adam_v: self.entries.iter().map(|(k, e)| (k.clone(), encode(&e.v))).collect(),
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(serde_json::to_string(&file)?.as_bytes())?;
        Ok(())
    }

    /// Loads a checkpoint; returns the parameters and the stored config.
    pub fn load(path: &Path) -> Result<(Self, serde_json::Value), CheckpointError> {
        let text = std::fs::read_to_string(path)?;
        let file: CheckpointFile = serde_json::from_str(&text)?;
        if file.schema != CHECKPOINT_SCHEMA {
            return Err(CheckpointError::Schema(file.schema));
        }
        if file.dtype != E::DTYPE {
            return Err(CheckpointError::Dtype {
                file: file.dtype,
                expected: E::DTYPE.to_string(),
            });
        }
        let mut set = ParamSet::new();
        set.step = file.step;
        for (name, rec) in &file.tensors {
            let value = decode::<E>(name, rec)?;
            set.insert(name, value);
        }
        for (name, rec) in &file.adam_m {
            let m = decode::<E>(name, rec)?;
            let e = set
                .entries
                .get_mut(name)
                .ok_or_else(|| CheckpointError::Corrupt(name.clone()))?;
            e.m = m;
        }
        for (name, rec) in &file.adam_v {
            let v = decode::<E>(name, rec)?;
            let e = set
                .entries
                .get_mut(name)
                .ok_or_else(|| CheckpointError::Corrupt(name.clone()))?;
            e.v = v;
        }
        Ok((set, file.config))
    }
}

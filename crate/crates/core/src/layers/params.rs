use std::ops::Index;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tape, Tensor, Var};

/// Index of a named array inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct ParamEntry {
    pub name: String,
    pub tensor: Tensor,
    /// `false` for buffers such as BatchNorm running statistics.
    pub trainable: bool,
}

/// Owns every learned array (and non-trainable buffer) of a model in
/// registration order. Layers refer to entries by [`ParamId`].
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
}

/// Tape handles for every entry of a store, valid for one forward pass.
#[derive(Clone, Debug)]
pub struct Bindings(Vec<Var>);

impl Index<ParamId> for Bindings {
    type Output = Var;
    fn index(&self, id: ParamId) -> &Var {
        &self.0[id.0]
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor, trainable: bool) -> ParamId {
        let name = name.into();
        debug_assert!(
            self.entries.iter().all(|e| e.name != name),
            "duplicate parameter name {name}"
        );
        self.entries.push(ParamEntry {
            name,
            tensor,
            trainable,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].tensor
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].tensor
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ParamEntry] {
        &mut self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    /// Number of trainable scalars.
    pub fn trainable_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.trainable)
            .map(|e| e.tensor.len())
            .sum()
    }

    /// Records every entry on `tape`; trainable entries receive gradients.
    pub fn bind(&self, tape: &mut Tape) -> Bindings {
        Bindings(
            self.entries
                .iter()
                .map(|e| tape.leaf(e.tensor.clone().with_requires_grad(e.trainable)))
                .collect(),
        )
    }

    /// Overwrites values from `(name, shape, data)` triples; every entry must be supplied.
    pub fn load(&mut self, arrays: &[NamedArray]) -> Result<()> {
        if arrays.len() != self.entries.len() {
            return Err(Error::Config(format!(
                "checkpoint holds {} arrays but the model has {}",
                arrays.len(),
                self.entries.len()
            )));
        }
        for entry in &mut self.entries {
            let arr = arrays
                .iter()
                .find(|a| a.name == entry.name)
                .ok_or_else(|| Error::Config(format!("checkpoint lacks array {}", entry.name)))?;
            if arr.shape != entry.tensor.shape() {
                return Err(Error::Config(format!(
                    "array {} has shape {:?}, model expects {:?}",
                    entry.name,
                    arr.shape,
                    entry.tensor.shape()
                )));
            }
            entry.tensor = Tensor::new(arr.shape.clone(), arr.data.clone())?;
        }
        Ok(())
    }

    pub fn export(&self) -> Vec<NamedArray> {
        self.entries
            .iter()
            .map(|e| NamedArray {
                name: e.name.clone(),
                shape: e.tensor.shape().to_vec(),
                trainable: e.trainable,
                data: e.tensor.data().to_vec(),
            })
            .collect()
    }
}

/// Serialized form of one store entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
    pub data: Vec<Real>,
}

/// Uniform in `±√(6/(fan_in+fan_out))`.
pub fn glorot_uniform(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..bound) as Real).collect();
    Tensor::new(shape.to_vec(), data).expect("shape and data agree")
}

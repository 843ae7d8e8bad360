//! JSON checkpoints.
//!
//! ```json
//! {
//!   "format": "idsnet-checkpoint",
//!   "version": 1,
//!   "config": { ...ModelConfig... },
//!   "arrays": [ { "name": "resnet.conv1.kernel", "shape": [3, 1, 64],
//!                 "trainable": true, "data": [ ... ] }, ... ],
//!   "preprocessing": { "schema": ..., "standardizer": ..., "options": ... }
//! }
//! ```
//!
//! Arrays are stored row-major in parameter-creation order, which is fixed
//! for a given config. Non-trainable arrays are the BatchNorm running
//! statistics. Floats are written in shortest round-trip form, so saving the
//! same parameters always produces the same bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Model, ModelConfig};
use crate::data::Preprocessing;
use crate::error::{Error, Result};
use crate::layers::NamedArray;

pub const CHECKPOINT_FORMAT: &str = "idsnet-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub arrays: Vec<NamedArray>,
    #[serde(default)]
    pub preprocessing: Option<Preprocessing>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, preprocessing: Option<Preprocessing>) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: model.config().clone(),
            arrays: model.params().export(),
            preprocessing,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!("not a checkpoint (format '{}')", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Rebuilds the network and loads every array into it.
    pub fn to_model(&self) -> Result<Model> {
        let mut model = Model::build(&self.config, 0)?;
        model.params_mut().load(&self.arrays)?;
        Ok(model)
    }

    /// SHA-256 of the serialized checkpoint, hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(format!("{:x}", Sha256::digest(self.to_json()?.as_bytes())))
    }
}

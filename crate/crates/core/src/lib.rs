//! Intrusion-detection toolkit built around a ResNet-1D → BiGRU →
//! multi-head attention classifier.
//!
//! Everything numeric is implemented here from first principles: a dense
//! tensor type with a reverse-mode autodiff [`tensor::Tape`], the layer
//! vocabulary, the model assembly and its ablation variants, the data
//! pipeline (CSV ingestion, label encoding, stratified splits, SMOTE),
//! Adam training, and multiclass evaluation metrics.

pub mod data;
pub mod error;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{Real, Tape, Tensor, Var};

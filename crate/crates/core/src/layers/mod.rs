//! Layer vocabulary recorded on a [`Tape`](crate::tensor::Tape).
//!
//! Each layer comes in two forms: a free function over tape variables
//! (used directly by tests and gradient checks), and a struct holding
//! [`ParamId`]s into a [`ParamStore`] used by the model builder.
//!
//! Batched layouts: sequences are `[batch × time × features]`, vectors are
//! `[batch × features]`. Weight matrices are stored `[in × out]` so that a
//! layer computes `x·W`.

pub mod attention;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod gru;
pub mod norm;
pub mod params;

pub use attention::{
    attention_scale, multi_head_attention, scaled_dot_product_attention, MultiHeadAttention, MhaVars,
};
pub use conv::{conv1d_forward, Conv1D, Padding};
pub use dense::{dense_forward, Dense, DenseActivation};
pub use dropout::dropout_forward;
pub use gru::{bigru_forward, gru_cell_step, gru_sequence, BiGru, GruVars};
pub use norm::{batchnorm_infer, batchnorm_train, layernorm_forward, BatchNorm, LayerNorm};
pub use params::{glorot_uniform, Bindings, NamedArray, ParamEntry, ParamId, ParamStore};

use serde::{Deserialize, Serialize};

use crate::tensor::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Infer,
}

/// A pending overwrite of a non-trainable buffer (BatchNorm running stats)
/// produced by a train-mode forward pass.
#[derive(Clone, Debug)]
pub struct BufferUpdate {
    pub id: ParamId,
    pub data: Vec<Real>,
}

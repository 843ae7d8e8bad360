use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Real;

/// Declarative description of one network variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Sequence length of one sample (number of features).
    pub time_steps: usize,
    /// Channels per time step.
    pub channels: usize,
    pub use_resnet_block: bool,
    pub use_bigru: bool,
    pub use_mha: bool,
    pub conv_filters: usize,
    pub kernel_size: usize,
    /// Hidden units per BiGRU direction.
    pub gru_units: usize,
    pub num_heads: usize,
    pub key_dim: usize,
    pub dropout_rate: Real,
    /// Hidden dense widths before the softmax output layer.
    pub dense_units: Vec<usize>,
    pub num_classes: usize,
    /// Whether the training split is SMOTE-balanced. Read by the pipeline,
    /// not by the network.
    pub use_smote: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::flagship(60, 6)
    }
}

impl ModelConfig {
    /// ResNet-1D → BiGRU → MHA with 4 heads, dropout 0.5 and a 64/32 dense head.
    pub fn flagship(time_steps: usize, num_classes: usize) -> Self {
        ModelConfig {
            time_steps,
            channels: 1,
            use_resnet_block: true,
            use_bigru: true,
            use_mha: true,
            conv_filters: 64,
            kernel_size: 3,
            gru_units: 64,
            num_heads: 4,
            key_dim: 64,
            dropout_rate: 0.5,
            dense_units: vec![64, 32],
            num_classes,
            use_smote: true,
        }
    }

    /// Edge-IIoTset shape: 60 features, 6 traffic categories.
    pub fn edge_iiot() -> Self {
        Self::flagship(60, 6)
    }

    /// CICIoV2024 shape: 9 features, 6 classes.
    pub fn ciciov2024() -> Self {
        Self::flagship(9, 6)
    }

    /// Checks every structural invariant, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if !self.use_resnet_block && !self.use_bigru {
            return fail("at least one of use_resnet_block / use_bigru must be true");
        }
        if self.num_classes < 2 {
            return fail("num_classes must be at least 2");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail("dropout_rate must lie in [0, 1)");
        }
        if self.time_steps == 0 || self.channels == 0 {
            return fail("input shape must be positive");
        }
        if self.use_resnet_block && (self.conv_filters == 0 || self.kernel_size == 0) {
            return fail("conv_filters and kernel_size must be positive");
        }
        if self.use_bigru && self.gru_units == 0 {
            return fail("gru_units must be positive");
        }
        if self.use_mha && (self.num_heads == 0 || self.key_dim == 0) {
            return fail("num_heads and key_dim must be positive when use_mha is set");
        }
        if self.dense_units.contains(&0) {
            return fail("dense_units entries must be positive");
        }
        Ok(())
    }

    /// Short architecture label in the style `ResNet-1D-BiGRU-MHA`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.use_resnet_block {
            parts.push("ResNet-1D");
        }
        if self.use_bigru {
            parts.push("BiGRU");
        }
        if self.use_mha {
            parts.push("MHA");
        }
        parts.join("-")
    }
}

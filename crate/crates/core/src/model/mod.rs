//! Network assembly from a [`ModelConfig`].
//!
//! Flagship layout, per sample:
//!
//! ```text
//! input (T, 1)
//!   ResNet block: Conv1D(64, k3)+BN+ReLU → Conv1D(64, k3)+BN, plus a
//!                 Conv1D(1×1, 64) shortcut, summed then ReLU     (T, 64)
//!   BiGRU(64 per direction)                                       (T, 128)
//!   LayerNorm                                                     (T, 128)
//!   MHA(4 heads, key_dim 64), output projected to 128             (T, 128)
//!   Dropout(0.5) → Flatten                                        T·128
//!   Dense(64, ReLU) → Dense(32, ReLU) → Dense(K, softmax)
//! ```
//!
//! Ablation variants drop blocks: without the ResNet block the BiGRU reads
//! the raw input; without the BiGRU the ResNet output goes straight to
//! dropout and the dense head. LayerNorm always follows the BiGRU.

mod checkpoint;
mod config;
mod grid;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::ModelConfig;
pub use grid::{ablation_grid, default_grid, AblationCase};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{
    dropout_forward, BatchNorm, BiGru, Bindings, BufferUpdate, Conv1D, Dense, DenseActivation, LayerNorm,
    Mode, MultiHeadAttention, ParamStore,
};
use crate::tensor::{Tape, Tensor, Var};

/// Per-sample output shape of one pipeline stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub shape: Vec<usize>,
}

impl Stage {
    fn new(name: impl Into<String>, shape: &[usize]) -> Self {
        Stage {
            name: name.into(),
            shape: shape.to_vec(),
        }
    }
}

#[derive(Clone, Debug)]
struct ResidualBlock {
    conv1: Conv1D,
    bn1: BatchNorm,
    conv2: Conv1D,
    bn2: BatchNorm,
    shortcut: Conv1D,
}

/// A built network: its configuration, parameters, and layer graph.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    store: ParamStore,
    resnet: Option<ResidualBlock>,
    bigru: Option<BiGru>,
    layer_norm: Option<LayerNorm>,
    mha: Option<MultiHeadAttention>,
    hidden: Vec<Dense>,
    output: Dense,
    stages: Vec<Stage>,
}

/// Everything a forward pass leaves behind.
pub struct ForwardPass {
    /// `[B × num_classes]` class probabilities.
    pub probs: Var,
    pub vars: Bindings,
    /// Running-statistic updates to apply after a train-mode step.
    pub updates: Vec<BufferUpdate>,
    /// Observed per-sample shapes, in order.
    pub stages: Vec<Stage>,
}

impl Model {
    /// Builds and initializes a model. The same config and seed always yield
    /// bit-identical parameters.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Model> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let mut stages = vec![Stage::new("input", &[config.time_steps, config.channels])];
        let t = config.time_steps;
        let mut width = config.channels;

        let resnet = config.use_resnet_block.then(|| {
            let f = config.conv_filters;
            let k = config.kernel_size;
            let block = ResidualBlock {
                conv1: Conv1D::new(&mut store, "resnet.conv1", width, f, k, &mut rng),
                bn1: BatchNorm::new(&mut store, "resnet.bn1", f),
                conv2: Conv1D::new(&mut store, "resnet.conv2", f, f, k, &mut rng),
                bn2: BatchNorm::new(&mut store, "resnet.bn2", f),
                shortcut: Conv1D::new(&mut store, "resnet.shortcut", width, f, 1, &mut rng),
            };
            width = f;
            stages.push(Stage::new("resnet", &[t, width]));
            block
        });
        let (bigru, layer_norm) = if config.use_bigru {
            let g = BiGru::new(&mut store, "bigru", width, config.gru_units, &mut rng);
            width = 2 * config.gru_units;
            stages.push(Stage::new("bigru", &[t, width]));
            let ln = LayerNorm::new(&mut store, "layernorm", width);
            stages.push(Stage::new("layernorm", &[t, width]));
            (Some(g), Some(ln))
        } else {
            (None, None)
        };
        let mha = config.use_mha.then(|| {
            let m = MultiHeadAttention::new(&mut store, "mha", width, config.num_heads, config.key_dim, &mut rng);
            stages.push(Stage::new("mha", &[t, width]));
            m
        });
        let mut features = t * width;
        stages.push(Stage::new("flatten", &[features]));
        let mut hidden = Vec::with_capacity(config.dense_units.len());
        for (i, &units) in config.dense_units.iter().enumerate() {
            let name = format!("dense{}", i + 1);
            hidden.push(Dense::new(&mut store, &name, features, units, DenseActivation::Relu, &mut rng));
            stages.push(Stage::new(name, &[units]));
            features = units;
        }
        let output = Dense::new(
            &mut store,
            "output",
            features,
            config.num_classes,
            DenseActivation::Softmax,
            &mut rng,
        );
        stages.push(Stage::new("output", &[config.num_classes]));

        Ok(Model {
            config: config.clone(),
            store,
            resnet,
            bigru,
            layer_norm,
            mha,
            hidden,
            output,
            stages,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Per-sample shapes fixed at build time.
    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn parameter_count(&self) -> usize {
        self.store.trainable_count()
    }

    /// Records a forward pass over `input: [B×T×C]` on `tape`.
    ///
    /// `rng` drives the dropout mask in train mode and is untouched in infer mode.
    pub fn forward(&self, tape: &mut Tape, input: Var, mode: Mode, rng: &mut ChaCha8Rng) -> Result<ForwardPass> {
        let shape = tape.shape(input).to_vec();
        let expected = [self.config.time_steps, self.config.channels];
        if shape.len() != 3 || shape[1..] != expected {
            return Err(Error::Dimension(format!(
                "model expects input [batch × {} × {}], got {shape:?}",
                expected[0], expected[1]
            )));
        }
        let batch = shape[0];
        let vars = self.store.bind(tape);
        let mut updates = Vec::new();
        let mut stages = vec![Stage::new("input", &shape[1..])];
        let mut record = |tape: &Tape, name: &str, v: Var| {
            stages.push(Stage::new(name, &tape.shape(v)[1..]));
        };

        let mut x = input;
        if let Some(block) = &self.resnet {
            let h = block.conv1.forward(tape, &vars, x)?;
            let h = block.bn1.forward(tape, &self.store, &vars, h, mode, &mut updates)?;
            let h = tape.relu(h);
            let h = block.conv2.forward(tape, &vars, h)?;
            let h = block.bn2.forward(tape, &self.store, &vars, h, mode, &mut updates)?;
            let s = block.shortcut.forward(tape, &vars, x)?;
            let sum = tape.add(h, s)?;
            x = tape.relu(sum);
            record(tape, "resnet", x);
        }
        if let (Some(gru), Some(ln)) = (&self.bigru, &self.layer_norm) {
            x = gru.forward(tape, &vars, x)?;
            record(tape, "bigru", x);
            x = ln.forward(tape, &vars, x)?;
            record(tape, "layernorm", x);
        }
        if let Some(mha) = &self.mha {
            x = mha.forward(tape, &vars, x)?;
            record(tape, "mha", x);
        }
        x = dropout_forward(tape, x, self.config.dropout_rate, mode, rng)?;
        x = tape.flatten(x)?;
        record(tape, "flatten", x);
        for (i, d) in self.hidden.iter().enumerate() {
            x = d.forward(tape, &vars, x)?;
            record(tape, &format!("dense{}", i + 1), x);
        }
        let probs = self.output.forward(tape, &vars, x)?;
        record(tape, "output", probs);
        debug_assert_eq!(tape.shape(probs), [batch, self.config.num_classes]);
        Ok(ForwardPass {
            probs,
            vars,
            updates,
            stages,
        })
    }

    /// Infer-mode class probabilities `[B × num_classes]`.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let x = tape.constant(batch.clone());
        // dropout is inactive in infer mode, so the generator is never drawn from
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pass = self.forward(&mut tape, x, Mode::Infer, &mut rng)?;
        Ok(tape.value(pass.probs).clone())
    }

    pub fn apply_updates(&mut self, updates: Vec<BufferUpdate>) {
        for u in updates {
            self.store.get_mut(u.id).data_mut().copy_from_slice(&u.data);
        }
    }
}

//! Cross-entropy training with Adam.

mod adam;
mod fit;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use fit::{
    argmax_rows, evaluate, measure_inference, train, write_epoch_csv, EpochRecord, Evaluation, Samples,
    TrainConfig, EPOCH_CSV_HEADER,
};
pub use loss::{cross_entropy, cross_entropy_loss, LOSS_FLOOR};

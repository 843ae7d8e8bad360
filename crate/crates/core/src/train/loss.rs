use crate::error::Result;
use crate::tensor::{Real, Tape, Var};

/// Probabilities below this are clamped before the logarithm.
pub const LOSS_FLOOR: Real = 1e-12;

/// Mean categorical cross-entropy of `[B × K]` probabilities, recorded on the tape.
pub fn cross_entropy_loss(tape: &mut Tape, probs: Var, labels: &[usize]) -> Result<Var> {
    tape.nll(probs, labels, LOSS_FLOOR)
}

/// The same loss on plain row-major probabilities, without a tape.
pub fn cross_entropy(probs: &[Real], classes: usize, labels: &[usize]) -> Real {
    if labels.is_empty() {
        return 0.0;
    }
    -labels
        .iter()
        .enumerate()
        .map(|(i, &y)| probs[i * classes + y].max(LOSS_FLOOR).ln())
        .sum::<Real>()
        / labels.len() as Real
}

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Mode;
use crate::error::{Error, Result};
use crate::tensor::{Real, Tape, Tensor, Var};

/// Inverted dropout: in train mode each element is zeroed with probability
/// `rate` and survivors are scaled by `1/(1 − rate)`; infer mode is the identity.
pub fn dropout_forward(tape: &mut Tape, x: Var, rate: Real, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Var> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Contract(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    if mode == Mode::Infer || rate == 0.0 {
        return Ok(x);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<Real> = (0..tape.data(x).len())
        .map(|_| if rng.gen::<f64>() < rate as f64 { 0.0 } else { keep })
        .collect();
    let mask = tape.constant(Tensor::new(tape.shape(x).to_vec(), mask)?);
    tape.mul(x, mask)
}

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{glorot_uniform, Bindings, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenseActivation {
    Relu,
    /// Only used on the final classification layer.
    Softmax,
    None,
}

/// `activation(x·W + b)` for `x: [B×in]`, `w: [in×out]`.
pub fn dense_forward(tape: &mut Tape, x: Var, w: Var, b: Var, act: DenseActivation) -> Result<Var> {
    let (xs, ws) = (tape.shape(x).to_vec(), tape.shape(w).to_vec());
    if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] || tape.shape(b) != [ws[1]] {
        return Err(Error::Dimension(format!(
            "dense: input {xs:?}, weights {ws:?}, bias {:?}",
            tape.shape(b)
        )));
    }
    let y = tape.matmul(x, w)?;
    let y = tape.add(y, b)?;
    Ok(match act {
        DenseActivation::Relu => tape.relu(y),
        DenseActivation::Softmax => tape.softmax(y, 1)?,
        DenseActivation::None => y,
    })
}

#[derive(Clone, Debug)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
    pub activation: DenseActivation,
    pub units: usize,
}

impl Dense {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        units: usize,
        activation: DenseActivation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Dense {
            w: store.add(format!("{name}.W"), glorot_uniform(&[input, units], input, units, rng), true),
            b: store.add(format!("{name}.b"), Tensor::zeros(&[units]), true),
            activation,
            units,
        }
    }

    pub fn forward(&self, tape: &mut Tape, vars: &Bindings, x: Var) -> Result<Var> {
        dense_forward(tape, x, vars[self.w], vars[self.b], self.activation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Real;
    use rand::SeedableRng;

    #[test]
    fn identity_weights_pass_through() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![1, 3], vec![1.0, -2.0, 3.0]).unwrap());
        let w = tape.constant(Tensor::new(vec![3, 3], vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap());
        let b = tape.constant(Tensor::zeros(&[3]));
        let y = dense_forward(&mut tape, x, w, b, DenseActivation::None).unwrap();
        assert_eq!(tape.data(y), &[1.0, -2.0, 3.0]);
        let r = dense_forward(&mut tape, x, w, b, DenseActivation::Relu).unwrap();
        assert_eq!(tape.data(r), &[1.0, 0.0, 3.0]);
    }

    #[test]
    fn six_way_softmax_sums_to_one() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layer = Dense::new(&mut store, "out", 32, 6, DenseActivation::Softmax, &mut rng);
        let mut tape = Tape::new();
        let vars = store.bind(&mut tape);
        let x = tape.constant(glorot_uniform(&[4, 32], 1, 1, &mut rng));
        let y = layer.forward(&mut tape, &vars, x).unwrap();
        for r in 0..4 {
            let s: Real = tape.value(y).row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_width_is_dimension_error() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 3]));
        let w = tape.constant(Tensor::zeros(&[4, 2]));
        let b = tape.constant(Tensor::zeros(&[2]));
        assert!(matches!(
            dense_forward(&mut tape, x, w, b, DenseActivation::None),
            Err(Error::Dimension(_))
        ));
    }
}

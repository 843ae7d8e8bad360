use super::{Bindings, BufferUpdate, Mode, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{NormAxis, Real, Tape, Tensor, Var};

pub const BATCHNORM_MOMENTUM: Real = 0.99;
pub const BATCHNORM_EPSILON: Real = 1e-3;
pub const LAYERNORM_EPSILON: Real = 1e-5;

/// Batch statistics of a train-mode BatchNorm pass, per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<Real>,
    /// Biased (population) variance.
    pub var: Vec<Real>,
}

fn channels_last(tape: &Tape, x: Var) -> Result<(Vec<usize>, usize, usize)> {
    let shape = tape.shape(x).to_vec();
    let channels = *shape
        .last()
        .ok_or_else(|| Error::Dimension("normalization of a rank-0 tensor".into()))?;
    let rows = tape.data(x).len() / channels;
    Ok((shape, rows, channels))
}

/// Normalizes each channel over batch × time with the batch's own statistics,
/// then scales by `gamma` and shifts by `beta`.
pub fn batchnorm_train(
    tape: &mut Tape,
    x: Var,
    gamma: Var,
    beta: Var,
    eps: Real,
) -> Result<(Var, BatchStats)> {
    let (shape, rows, channels) = channels_last(tape, x)?;
    if rows < 2 {
        return Err(Error::Contract(format!(
            "batch normalization in train mode needs at least 2 values per channel, got {rows}"
        )));
    }
    let d = tape.data(x);
    let mut mean = vec![0.0; channels];
    let mut var = vec![0.0; channels];
    for r in 0..rows {
        for c in 0..channels {
            mean[c] += d[r * channels + c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as Real);
    for r in 0..rows {
        for c in 0..channels {
            var[c] += (d[r * channels + c] - mean[c]).powi(2);
        }
    }
    var.iter_mut().for_each(|v| *v /= rows as Real);

    let flat = tape.reshape(x, &[rows, channels])?;
    let norm = tape.standardize(flat, NormAxis::Columns, eps)?;
    let scaled = tape.mul(norm, gamma)?;
    let shifted = tape.add(scaled, beta)?;
    Ok((tape.reshape(shifted, &shape)?, BatchStats { mean, var }))
}

/// `(x − μ)/√(σ² + ε)·γ + β` with frozen running statistics.
pub fn batchnorm_infer(
    tape: &mut Tape,
    x: Var,
    gamma: Var,
    beta: Var,
    running_mean: &[Real],
    running_var: &[Real],
    eps: Real,
) -> Result<Var> {
    let inv: Vec<Real> = running_var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mu = tape.constant(Tensor::vector(running_mean.to_vec()));
    let inv = tape.constant(Tensor::vector(inv));
    let centered = tape.sub(x, mu)?;
    let norm = tape.mul(centered, inv)?;
    let scaled = tape.mul(norm, gamma)?;
    tape.add(scaled, beta)
}

/// Per-time-step normalization over the feature axis.
pub fn layernorm_forward(tape: &mut Tape, x: Var, gamma: Var, beta: Var, eps: Real) -> Result<Var> {
    let (shape, rows, features) = channels_last(tape, x)?;
    if tape.shape(gamma) != [features] {
        return Err(Error::Dimension(format!(
            "layernorm over {features} features given gamma of shape {:?}",
            tape.shape(gamma)
        )));
    }
    let flat = tape.reshape(x, &[rows, features])?;
    let norm = tape.standardize(flat, NormAxis::Rows, eps)?;
    let scaled = tape.mul(norm, gamma)?;
    let shifted = tape.add(scaled, beta)?;
    tape.reshape(shifted, &shape)
}

#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub momentum: Real,
    pub epsilon: Real,
}

impl BatchNorm {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Self {
        BatchNorm {
            gamma: store.add(format!("{name}.gamma"), Tensor::full(&[channels], 1.0), true),
            beta: store.add(format!("{name}.beta"), Tensor::zeros(&[channels]), true),
            running_mean: store.add(format!("{name}.running_mean"), Tensor::zeros(&[channels]), false),
            running_var: store.add(format!("{name}.running_var"), Tensor::full(&[channels], 1.0), false),
            momentum: BATCHNORM_MOMENTUM,
            epsilon: BATCHNORM_EPSILON,
        }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        vars: &Bindings,
        x: Var,
        mode: Mode,
        updates: &mut Vec<BufferUpdate>,
    ) -> Result<Var> {
        let (gamma, beta) = (vars[self.gamma], vars[self.beta]);
        match mode {
            Mode::Train => {
                let (y, stats) = batchnorm_train(tape, x, gamma, beta, self.epsilon)?;
                let blend = |old: &[Real], new: &[Real]| -> Vec<Real> {
                    old.iter()
                        .zip(new)
                        .map(|(o, n)| self.momentum * o + (1.0 - self.momentum) * n)
                        .collect()
                };
                updates.push(BufferUpdate {
                    id: self.running_mean,
                    data: blend(store.get(self.running_mean).data(), &stats.mean),
                });
                updates.push(BufferUpdate {
                    id: self.running_var,
                    data: blend(store.get(self.running_var).data(), &stats.var),
                });
                Ok(y)
            }
            Mode::Infer => batchnorm_infer(
                tape,
                x,
                gamma,
                beta,
                store.get(self.running_mean).data(),
                store.get(self.running_var).data(),
                self.epsilon,
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub epsilon: Real,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, features: usize) -> Self {
        LayerNorm {
            gamma: store.add(format!("{name}.gamma"), Tensor::full(&[features], 1.0), true),
            beta: store.add(format!("{name}.beta"), Tensor::zeros(&[features]), true),
            epsilon: LAYERNORM_EPSILON,
        }
    }

    pub fn forward(&self, tape: &mut Tape, vars: &Bindings, x: Var) -> Result<Var> {
        layernorm_forward(tape, x, vars[self.gamma], vars[self.beta], self.epsilon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_affine(tape: &mut Tape, c: usize) -> (Var, Var) {
        (
            tape.constant(Tensor::full(&[c], 1.0)),
            tape.constant(Tensor::zeros(&[c])),
        )
    }

    fn column_moments(t: &Tensor) -> (Vec<Real>, Vec<Real>) {
        let c = *t.shape().last().unwrap();
        let rows = t.len() / c;
        let d = t.data();
        let mean: Vec<Real> = (0..c)
            .map(|j| (0..rows).map(|r| d[r * c + j]).sum::<Real>() / rows as Real)
            .collect();
        let var = (0..c)
            .map(|j| (0..rows).map(|r| (d[r * c + j] - mean[j]).powi(2)).sum::<Real>() / rows as Real)
            .collect();
        (mean, var)
    }

    #[test]
    fn train_mode_standardizes_each_channel() {
        let data: Vec<Real> = (0..2 * 5 * 3).map(|i| ((i * 7 % 11) as Real) * 0.9 - 2.0).collect();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![2, 5, 3], data).unwrap());
        let (g, b) = unit_affine(&mut tape, 3);
        let (y, _) = batchnorm_train(&mut tape, x, g, b, 1e-8).unwrap();
        let (mean, var) = column_moments(tape.value(y));
        for (m, v) in mean.iter().zip(&var) {
            assert!(m.abs() < 1e-5);
            assert!((v - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_channel_gives_zeros() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::full(&[4, 3, 2], 7.25));
        let (g, b) = unit_affine(&mut tape, 2);
        let (y, _) = batchnorm_train(&mut tape, x, g, b, BATCHNORM_EPSILON).unwrap();
        assert!(tape.data(y).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn train_mode_needs_two_values() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 1, 2]));
        let (g, b) = unit_affine(&mut tape, 2);
        assert!(matches!(
            batchnorm_train(&mut tape, x, g, b, 1e-3),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn infer_mode_matches_hand_formula() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, -4.0]).unwrap());
        let g = tape.constant(Tensor::vector(vec![2.0, 0.5]));
        let b = tape.constant(Tensor::vector(vec![0.1, -0.2]));
        let (rm, rv, eps) = ([0.5, -1.0], [4.0, 0.25], 1e-3);
        let y = batchnorm_infer(&mut tape, x, g, b, &rm, &rv, eps).unwrap();
        let xs = [1.0, 2.0, 3.0, -4.0];
        let gs = [2.0, 0.5];
        let bs = [0.1, -0.2];
        for (i, &out) in tape.data(y).iter().enumerate() {
            let c = i % 2;
            let expected = (xs[i] - rm[c]) / (rv[c] + eps).sqrt() * gs[c] + bs[c];
            assert!((out - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_samples_normalize_to_zero_before_affine() {
        // four identical single-step samples
        let mut tape = Tape::new();
        let same: Vec<Real> = [0.3, -1.0].iter().cycle().take(8).copied().collect();
        let x = tape.constant(Tensor::new(vec![4, 1, 2], same).unwrap());
        let (g, b) = unit_affine(&mut tape, 2);
        let (y, _) = batchnorm_train(&mut tape, x, g, b, 1e-3).unwrap();
        assert!(tape.data(y).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn layernorm_rows_are_standardized() {
        let data: Vec<Real> = (0..12).map(|i| (i as Real * 1.3).sin() * 4.0 + 1.0).collect();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![3, 4], data).unwrap());
        let (g, b) = unit_affine(&mut tape, 4);
        let y = layernorm_forward(&mut tape, x, g, b, 1e-10).unwrap();
        for r in 0..3 {
            let row = tape.value(y).row(r).to_vec();
            let m = row.iter().sum::<Real>() / 4.0;
            let v = row.iter().map(|x| (x - m).powi(2)).sum::<Real>() / 4.0;
            assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn layernorm_constant_row_is_zero() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::full(&[2, 5], -3.0));
        let (g, b) = unit_affine(&mut tape, 5);
        let y = layernorm_forward(&mut tape, x, g, b, LAYERNORM_EPSILON).unwrap();
        assert!(tape.data(y).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn layernorm_ignores_positive_affine_input_transform() {
        let data: Vec<Real> = (0..10).map(|i| (i as Real * 0.77).cos() * 2.0).collect();
        let shifted: Vec<Real> = data.iter().map(|v| 3.5 * v - 11.0).collect();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![2, 5], data).unwrap());
        let x2 = tape.constant(Tensor::new(vec![2, 5], shifted).unwrap());
        let (g, b) = unit_affine(&mut tape, 5);
        let y = layernorm_forward(&mut tape, x, g, b, 1e-12).unwrap();
        let y2 = layernorm_forward(&mut tape, x2, g, b, 1e-12).unwrap();
        for (p, q) in tape.data(y).iter().zip(tape.data(y2)) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}

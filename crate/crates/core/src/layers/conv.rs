use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{glorot_uniform, Bindings, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero-pad so that stride 1 keeps the time length.
    Same,
    Valid,
}

impl Padding {
    /// `(left padding, output length)` for a sequence of length `time`.
    pub fn geometry(self, time: usize, kernel: usize, stride: usize) -> Option<(usize, usize)> {
        match self {
            Padding::Same => Some(((kernel - 1) / 2, time.div_ceil(stride))),
            Padding::Valid => (time >= kernel).then(|| (0, (time - kernel) / stride + 1)),
        }
    }
}

/// 1-D cross-correlation (no kernel flip).
///
/// `x: [B×T×C_in]`, `kernel: [K×C_in×C_out]`, `bias: [C_out]` → `[B×T'×C_out]`.
pub fn conv1d_forward(
    tape: &mut Tape,
    x: Var,
    kernel: Var,
    bias: Var,
    stride: usize,
    padding: Padding,
) -> Result<Var> {
    let xs = tape.shape(x).to_vec();
    let ks = tape.shape(kernel).to_vec();
    let (&[batch, time, c_in], &[k, kc_in, c_out]) = (&xs[..], &ks[..]) else {
        return Err(Error::Dimension(format!(
            "conv1d expects [B×T×C] input and [K×C_in×C_out] kernel, got {xs:?} and {ks:?}"
        )));
    };
    if c_in != kc_in {
        return Err(Error::Dimension(format!(
            "conv1d: input has {c_in} channels but kernel expects {kc_in} ({xs:?} vs {ks:?})"
        )));
    }
    let (pad_left, time_out) = padding.geometry(time, k, stride).ok_or_else(|| {
        Error::Dimension(format!("conv1d: sequence of {time} shorter than kernel {k}"))
    })?;
    let cols = tape.im2col(x, k, stride, pad_left, time_out)?;
    let w = tape.reshape(kernel, &[k * c_in, c_out])?;
    let y = tape.matmul(cols, w)?;
    let y = tape.add(y, bias)?;
    tape.reshape(y, &[batch, time_out, c_out])
}

#[derive(Clone, Debug)]
pub struct Conv1D {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub kernel_size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub padding: Padding,
}

impl Conv1D {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let kernel = glorot_uniform(
            &[kernel_size, in_channels, out_channels],
            kernel_size * in_channels,
            kernel_size * out_channels,
            rng,
        );
        Conv1D {
            kernel: store.add(format!("{name}.kernel"), kernel, true),
            bias: store.add(format!("{name}.bias"), Tensor::zeros(&[out_channels]), true),
            kernel_size,
            in_channels,
            out_channels,
            stride: 1,
            padding: Padding::Same,
        }
    }

    pub fn forward(&self, tape: &mut Tape, vars: &Bindings, x: Var) -> Result<Var> {
        conv1d_forward(tape, x, vars[self.kernel], vars[self.bias], self.stride, self.padding)
    }
}

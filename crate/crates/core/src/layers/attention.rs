use rand_chacha::ChaCha8Rng;

use super::{glorot_uniform, Bindings, ParamId, ParamStore};
use crate::error::{dim_err, Error, Result};
use crate::tensor::{Real, Tape, Var};

/// Divisor applied to `Q·Kᵀ` before the softmax.
pub fn attention_scale(key_dim: usize) -> Real {
    (key_dim as Real).sqrt()
}

/// Output of [`scaled_dot_product_attention`].
#[derive(Clone, Copy, Debug)]
pub struct Attended {
    pub output: Var,
    /// Row-stochastic attention weights `[.. × T_q × T_k]`.
    pub weights: Var,
}

/// `softmax(Q·Kᵀ/√d_q)·V` over 2-D `[T×d]` or batched `[G×T×d]` operands.
pub fn scaled_dot_product_attention(tape: &mut Tape, q: Var, k: Var, v: Var) -> Result<Attended> {
    let (qs, ks, vs) = (tape.shape(q).to_vec(), tape.shape(k).to_vec(), tape.shape(v).to_vec());
    let rank = qs.len();
    if !(2..=3).contains(&rank) || ks.len() != rank || vs.len() != rank {
        return Err(Error::Dimension(format!(
            "attention expects matching 2-D or 3-D operands, got {qs:?}, {ks:?}, {vs:?}"
        )));
    }
    if qs[rank - 1] != ks[rank - 1] {
        return Err(dim_err("attention (query/key width)", &qs, &ks));
    }
    if ks[rank - 2] != vs[rank - 2] {
        return Err(dim_err("attention (key/value length)", &ks, &vs));
    }
    let d_q = qs[rank - 1];
    let scores = tape.matmul_nt(q, k)?;
    let scores = tape.scale(scores, 1.0 / attention_scale(d_q));
    let weights = tape.softmax(scores, rank - 1)?;
    let output = tape.matmul(weights, v)?;
    Ok(Attended { output, weights })
}

/// Tape handles for multi-head attention weights. Head `h` owns columns
/// `h·key_dim .. (h+1)·key_dim` of each projection.
#[derive(Clone, Copy, Debug)]
pub struct MhaVars {
    /// `[model_dim × heads·key_dim]`
    pub w_q: Var,
    pub w_k: Var,
    pub w_v: Var,
    /// `[heads·key_dim × model_dim]`
    pub w_o: Var,
    pub num_heads: usize,
    pub key_dim: usize,
}

/// Self-attention over `x: [B×T×F]`: per head `Q = x·W_Q`, `K = x·W_K`,
/// `V = x·W_V`, scaled dot-product attention, heads concatenated and
/// projected back to width `F` by `W_O`.
pub fn multi_head_attention(tape: &mut Tape, x: Var, p: &MhaVars) -> Result<Var> {
    let shape = tape.shape(x).to_vec();
    let [batch, time, model_dim] = shape[..] else {
        return Err(Error::Dimension(format!("attention expects [B×T×F], got {shape:?}")));
    };
    let width = p.num_heads * p.key_dim;
    for (name, w, expect) in [
        ("W_Q", p.w_q, [model_dim, width]),
        ("W_K", p.w_k, [model_dim, width]),
        ("W_V", p.w_v, [model_dim, width]),
        ("W_O", p.w_o, [width, model_dim]),
    ] {
        if tape.shape(w) != expect {
            return Err(Error::Dimension(format!(
                "{name} has shape {:?}, expected {expect:?} for input {shape:?}",
                tape.shape(w)
            )));
        }
    }
    let flat = tape.reshape(x, &[batch * time, model_dim])?;
    let mut project = |w: Var| -> Result<Var> {
        let y = tape.matmul(flat, w)?;
        tape.reshape(y, &[batch, time, width])
    };
    let (q, k, v) = (project(p.w_q)?, project(p.w_k)?, project(p.w_v)?);
    let mut heads = Vec::with_capacity(p.num_heads);
    for h in 0..p.num_heads {
        let start = h * p.key_dim;
        let qh = tape.slice(q, 2, start, p.key_dim)?;
        let kh = tape.slice(k, 2, start, p.key_dim)?;
        let vh = tape.slice(v, 2, start, p.key_dim)?;
        heads.push(scaled_dot_product_attention(tape, qh, kh, vh)?.output);
    }
    let joined = if heads.len() == 1 { heads[0] } else { tape.concat(&heads, 2)? };
    let joined = tape.reshape(joined, &[batch * time, width])?;
    let out = tape.matmul(joined, p.w_o)?;
    tape.reshape(out, &[batch, time, model_dim])
}

#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub w_q: ParamId,
    pub w_k: ParamId,
    pub w_v: ParamId,
    pub w_o: ParamId,
    pub num_heads: usize,
    pub key_dim: usize,
}

impl MultiHeadAttention {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        model_dim: usize,
        num_heads: usize,
        key_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let width = num_heads * key_dim;
        let mut proj = |p: &str, rows, cols| {
            store.add(format!("{name}.{p}"), glorot_uniform(&[rows, cols], rows, cols, rng), true)
        };
        MultiHeadAttention {
            w_q: proj("W_Q", model_dim, width),
            w_k: proj("W_K", model_dim, width),
            w_v: proj("W_V", model_dim, width),
            w_o: proj("W_O", width, model_dim),
            num_heads,
            key_dim,
        }
    }

    pub fn vars(&self, vars: &Bindings) -> MhaVars {
        MhaVars {
            w_q: vars[self.w_q],
            w_k: vars[self.w_k],
            w_v: vars[self.w_v],
            w_o: vars[self.w_o],
            num_heads: self.num_heads,
            key_dim: self.key_dim,
        }
    }

    pub fn forward(&self, tape: &mut Tape, vars: &Bindings, x: Var) -> Result<Var> {
        multi_head_attention(tape, x, &self.vars(vars))
    }
}

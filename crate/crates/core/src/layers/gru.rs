//! Gated recurrent unit, reset-before-candidate form:
//!
//! ```text
//! z  = σ(x·W_z + h·U_z + b_z)
//! r  = σ(x·W_r + h·U_r + b_r)
//! h̃  = tanh(x·W_h + (r∘h)·U_h + b_h)
//! h' = (1 − z)∘h + z∘h̃
//! ```
//!
//! The initial hidden state is zero. The input projections of all time steps
//! are computed in one matrix product before the recurrence runs.

use rand_chacha::ChaCha8Rng;

use super::{glorot_uniform, Bindings, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

/// Tape handles for one direction's gate weights.
#[derive(Clone, Copy, Debug)]
pub struct GruVars {
    pub w_update: Var,
    pub u_update: Var,
    pub b_update: Var,
    pub w_reset: Var,
    pub u_reset: Var,
    pub b_reset: Var,
    pub w_cand: Var,
    pub u_cand: Var,
    pub b_cand: Var,
}

struct Fused {
    /// `[in × 3H]`, columns ordered update | reset | candidate.
    w: Var,
    b: Var,
    /// `[H × 2H]` recurrent weights of the two gates.
    u_gates: Var,
    u_cand: Var,
    hidden: usize,
}

impl GruVars {
    pub fn hidden_size(&self, tape: &Tape) -> usize {
        tape.shape(self.b_update)[0]
    }

    pub fn input_size(&self, tape: &Tape) -> usize {
        tape.shape(self.w_update)[0]
    }

    fn fuse(&self, tape: &mut Tape) -> Result<Fused> {
        let hidden = self.hidden_size(tape);
        let input = self.input_size(tape);
        for (w, u, b) in [
            (self.w_update, self.u_update, self.b_update),
            (self.w_reset, self.u_reset, self.b_reset),
            (self.w_cand, self.u_cand, self.b_cand),
        ] {
            if tape.shape(w) != [input, hidden] || tape.shape(u) != [hidden, hidden] || tape.shape(b) != [hidden] {
                return Err(Error::Dimension(format!(
                    "GRU gate shapes {:?}, {:?}, {:?} disagree with input {input} / hidden {hidden}",
                    tape.shape(w),
                    tape.shape(u),
                    tape.shape(b)
                )));
            }
        }
        Ok(Fused {
            w: tape.concat(&[self.w_update, self.w_reset, self.w_cand], 1)?,
            b: tape.concat(&[self.b_update, self.b_reset, self.b_cand], 0)?,
            u_gates: tape.concat(&[self.u_update, self.u_reset], 1)?,
            u_cand: self.u_cand,
            hidden,
        })
    }
}

/// One recurrence step given the precomputed input projection `xp = x·W + b`.
fn step(tape: &mut Tape, xp: Var, h: Var, f: &Fused) -> Result<Var> {
    let hd = f.hidden;
    let hu = tape.matmul(h, f.u_gates)?;
    let xz = tape.slice(xp, 1, 0, hd)?;
    let xr = tape.slice(xp, 1, hd, hd)?;
    let xc = tape.slice(xp, 1, 2 * hd, hd)?;
    let hz = tape.slice(hu, 1, 0, hd)?;
    let hr = tape.slice(hu, 1, hd, hd)?;
    let z = tape.add(xz, hz)?;
    let z = tape.sigmoid(z);
    let r = tape.add(xr, hr)?;
    let r = tape.sigmoid(r);
    let rh = tape.mul(r, h)?;
    let rc = tape.matmul(rh, f.u_cand)?;
    let cand = tape.add(xc, rc)?;
    let cand = tape.tanh(cand);
    let delta = tape.sub(cand, h)?;
    let moved = tape.mul(z, delta)?;
    tape.add(h, moved)
}

/// Single GRU step: `x_t: [B×in]`, `h_prev: [B×H]` → `[B×H]`.
pub fn gru_cell_step(tape: &mut Tape, x_t: Var, h_prev: Var, p: &GruVars) -> Result<Var> {
    let f = p.fuse(tape)?;
    let xs = tape.shape(x_t).to_vec();
    let hs = tape.shape(h_prev).to_vec();
    if xs.len() != 2 || hs != [xs[0], f.hidden] {
        return Err(Error::Dimension(format!(
            "gru step: input {xs:?} and hidden state {hs:?} disagree with hidden size {}",
            f.hidden
        )));
    }
    let xp = tape.matmul(x_t, f.w)?;
    let xp = tape.add(xp, f.b)?;
    step(tape, xp, h_prev, &f)
}

/// Runs one direction over `x: [B×T×F]` and returns `[B×T×H]`, where output
/// step `t` is always aligned with input step `t`.
pub fn gru_sequence(tape: &mut Tape, x: Var, p: &GruVars, reverse: bool) -> Result<Var> {
    let f = p.fuse(tape)?;
    let shape = tape.shape(x).to_vec();
    let [batch, time, features] = shape[..] else {
        return Err(Error::Dimension(format!("GRU expects [B×T×F], got {shape:?}")));
    };
    let input = p.input_size(tape);
    if features != input {
        return Err(Error::Dimension(format!(
            "GRU input width {features} does not match weights for {input}"
        )));
    }
    let hd = f.hidden;
    let flat = tape.reshape(x, &[batch * time, features])?;
    let proj = tape.matmul(flat, f.w)?;
    let proj = tape.add(proj, f.b)?;
    let proj = tape.reshape(proj, &[batch, time, 3 * hd])?;

    let mut h = tape.constant(Tensor::zeros(&[batch, hd]));
    let mut outputs = vec![None; time];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..time).rev())
    } else {
        Box::new(0..time)
    };
    for t in order {
        let xp = tape.slice(proj, 1, t, 1)?;
        let xp = tape.reshape(xp, &[batch, 3 * hd])?;
        h = step(tape, xp, h, &f)?;
        outputs[t] = Some(tape.reshape(h, &[batch, 1, hd])?);
    }
    let outputs: Vec<Var> = outputs.into_iter().map(|o| o.expect("every step visited")).collect();
    tape.concat(&outputs, 1)
}

/// Forward and backward GRU passes concatenated per time step, forward half first.
pub fn bigru_forward(tape: &mut Tape, x: Var, fwd: &GruVars, bwd: &GruVars) -> Result<Var> {
    let (hf, hb) = (fwd.hidden_size(tape), bwd.hidden_size(tape));
    if hf != hb {
        return Err(Error::Contract(format!(
            "BiGRU directions disagree on hidden size: {hf} vs {hb}"
        )));
    }
    let f = gru_sequence(tape, x, fwd, false)?;
    let b = gru_sequence(tape, x, bwd, true)?;
    tape.concat(&[f, b], 2)
}

#[derive(Clone, Copy, Debug)]
pub struct GateIds {
    pub w: ParamId,
    pub u: ParamId,
    pub b: ParamId,
}

#[derive(Clone, Debug)]
pub struct GruDirection {
    pub update: GateIds,
    pub reset: GateIds,
    pub candidate: GateIds,
}

impl GruDirection {
    fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut gate = |gate: &str| GateIds {
            w: store.add(
                format!("{name}.{gate}.W"),
                glorot_uniform(&[input, hidden], input, hidden, rng),
                true,
            ),
            u: store.add(
                format!("{name}.{gate}.U"),
                glorot_uniform(&[hidden, hidden], hidden, hidden, rng),
                true,
            ),
            b: store.add(format!("{name}.{gate}.b"), Tensor::zeros(&[hidden]), true),
        };
        GruDirection {
            update: gate("update"),
            reset: gate("reset"),
            candidate: gate("candidate"),
        }
    }

    pub fn vars(&self, vars: &Bindings) -> GruVars {
        GruVars {
            w_update: vars[self.update.w],
            u_update: vars[self.update.u],
            b_update: vars[self.update.b],
            w_reset: vars[self.reset.w],
            u_reset: vars[self.reset.u],
            b_reset: vars[self.reset.b],
            w_cand: vars[self.candidate.w],
            u_cand: vars[self.candidate.u],
            b_cand: vars[self.candidate.b],
        }
    }
}

#[derive(Clone, Debug)]
pub struct BiGru {
    pub forward: GruDirection,
    pub backward: GruDirection,
    pub hidden: usize,
}

impl BiGru {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        BiGru {
            forward: GruDirection::new(store, &format!("{name}.fwd"), input, hidden, rng),
            backward: GruDirection::new(store, &format!("{name}.bwd"), input, hidden, rng),
            hidden,
        }
    }

    pub fn forward(&self, tape: &mut Tape, vars: &Bindings, x: Var) -> Result<Var> {
        bigru_forward(tape, x, &self.forward.vars(vars), &self.backward.vars(vars))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Real;
    use rand::SeedableRng;

    fn random_vars(tape: &mut Tape, input: usize, hidden: usize, seed: u64) -> GruVars {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = |r, c| tape.constant(glorot_uniform(&[r, c], r, c, &mut rng));
        let (w_update, u_update) = (m(input, hidden), m(hidden, hidden));
        let (w_reset, u_reset) = (m(input, hidden), m(hidden, hidden));
        let (w_cand, u_cand) = (m(input, hidden), m(hidden, hidden));
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let mut b = || tape.constant(glorot_uniform(&[hidden], hidden, hidden, &mut rng));
        GruVars {
            w_update,
            u_update,
            b_update: b(),
            w_reset,
            u_reset,
            b_reset: b(),
            w_cand,
            u_cand,
            b_cand: b(),
        }
    }

    fn zero_vars(tape: &mut Tape, input: usize, hidden: usize) -> GruVars {
        let mut z = |s: &[usize]| tape.constant(Tensor::zeros(s));
        GruVars {
            w_update: z(&[input, hidden]),
            u_update: z(&[hidden, hidden]),
            b_update: z(&[hidden]),
            w_reset: z(&[input, hidden]),
            u_reset: z(&[hidden, hidden]),
            b_reset: z(&[hidden]),
            w_cand: z(&[input, hidden]),
            u_cand: z(&[hidden, hidden]),
            b_cand: z(&[hidden]),
        }
    }

    #[test]
    fn zero_weights_halve_the_state() {
        let mut tape = Tape::new();
        let p = zero_vars(&mut tape, 3, 4);
        let x = tape.constant(Tensor::new(vec![1, 3], vec![1.0, -2.0, 0.5]).unwrap());
        let h = tape.constant(Tensor::new(vec![1, 4], vec![0.8, -0.6, 2.0, 0.0]).unwrap());
        let out = gru_cell_step(&mut tape, x, h, &p).unwrap();
        assert_eq!(tape.data(out), &[0.4, -0.3, 1.0, 0.0]);
    }

    #[test]
    fn single_step_sequence_matches_cell() {
        let mut tape = Tape::new();
        let fwd = random_vars(&mut tape, 2, 3, 1);
        let bwd = random_vars(&mut tape, 2, 3, 2);
        let xv = Tensor::new(vec![1, 1, 2], vec![0.4, -1.1]).unwrap();
        let x = tape.constant(xv.clone());
        let out = bigru_forward(&mut tape, x, &fwd, &bwd).unwrap();
        assert_eq!(tape.shape(out), &[1, 1, 6]);
        let x2 = tape.constant(xv.reshaped(&[1, 2]).unwrap());
        let h0 = tape.constant(Tensor::zeros(&[1, 3]));
        let f = gru_cell_step(&mut tape, x2, h0, &fwd).unwrap();
        let b = gru_cell_step(&mut tape, x2, h0, &bwd).unwrap();
        let expected: Vec<Real> = tape.data(f).iter().chain(tape.data(b)).copied().collect();
        assert_eq!(tape.data(out), expected.as_slice());
    }

    #[test]
    fn backward_half_is_forward_half_of_reversed_input() {
        let (batch, time, feat, hidden) = (2, 5, 3, 4);
        let data: Vec<Real> = (0..batch * time * feat).map(|i| (i as Real * 0.61).sin()).collect();
        let mut rev = vec![0.0; data.len()];
        for b in 0..batch {
            for t in 0..time {
                for f in 0..feat {
                    rev[(b * time + (time - 1 - t)) * feat + f] = data[(b * time + t) * feat + f];
                }
            }
        }
        let mut tape = Tape::new();
        let p1 = random_vars(&mut tape, feat, hidden, 7);
        let p2 = random_vars(&mut tape, feat, hidden, 8);
        let x = tape.constant(Tensor::new(vec![batch, time, feat], data).unwrap());
        let xr = tape.constant(Tensor::new(vec![batch, time, feat], rev).unwrap());
        let out = bigru_forward(&mut tape, x, &p1, &p2).unwrap();
        // swapped parameters on the reversed sequence
        let out_r = bigru_forward(&mut tape, xr, &p2, &p1).unwrap();
        let a = tape.value(out).clone();
        let b = tape.value(out_r).clone();
        for bi in 0..batch {
            for t in 0..time {
                for k in 0..hidden {
                    let bwd_half = a.at(&[bi, t, hidden + k]);
                    let fwd_half_rev = b.at(&[bi, time - 1 - t, k]);
                    assert!((bwd_half - fwd_half_rev).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hidden_mismatch_is_contract_error() {
        let mut tape = Tape::new();
        let p1 = random_vars(&mut tape, 2, 3, 1);
        let p2 = random_vars(&mut tape, 2, 4, 2);
        let x = tape.constant(Tensor::zeros(&[1, 2, 2]));
        assert!(matches!(bigru_forward(&mut tape, x, &p1, &p2), Err(Error::Contract(_))));
    }

    #[test]
    fn flagship_configuration_output_shape() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layer = BiGru::new(&mut store, "bigru", 1, 64, &mut rng);
        let mut tape = Tape::new();
        let vars = store.bind(&mut tape);
        let x = tape.constant(Tensor::full(&[1, 60, 1], 0.1));
        let y = layer.forward(&mut tape, &vars, x).unwrap();
        assert_eq!(tape.shape(y), &[1, 60, 128]);
    }
}

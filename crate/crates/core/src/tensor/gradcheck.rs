//! Central-difference gradient oracle.
//!
//! Functions with a kink (ReLU at 0) are not differentiable there; callers
//! nudge inputs away from such points before checking.

use super::{Real, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Central-difference estimate of the gradient of scalar `f` at `x`.
pub fn numeric_gradient<F>(mut f: F, x: &Tensor, h: Real) -> Vec<Real>
where
    F: FnMut(&Tensor) -> Real,
{
    let mut probe = x.clone();
    (0..x.len())
        .map(|i| {
            let orig = probe.data()[i];
            probe.data_mut()[i] = orig + h;
            let up = f(&probe);
            probe.data_mut()[i] = orig - h;
            let down = f(&probe);
            probe.data_mut()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest `|analytic − numeric| / max(1, |analytic|)` over the coordinates of `x`.
pub fn relative_error(analytic: &[Real], numeric: &[Real]) -> Real {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(1.0))
        .fold(0.0, Real::max)
}

/// Compares the tape gradient of the scalar built by `f` against central
/// differences with step `h` and returns the max relative error.
pub fn grad_check<F>(f: F, x: &Tensor, h: Real) -> Result<Real>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    if h <= 0.0 {
        return Err(Error::Contract(format!("finite-difference step must be positive, got {h}")));
    }
    let mut tape = Tape::new();
    let v = tape.param(x.clone());
    let out = f(&mut tape, v)?;
    tape.backward(out)?;
    let analytic = tape
        .grad(v)
        .map(<[Real]>::to_vec)
        .unwrap_or_else(|| vec![0.0; x.len()]);

    let eval = |probe: &Tensor| -> Real {
        let mut tape = Tape::new();
        let v = tape.constant(probe.clone());
        match f(&mut tape, v) {
            Ok(o) => tape.data(o)[0],
            Err(_) => Real::NAN,
        }
    };
    let numeric = numeric_gradient(eval, x, h);
    Ok(relative_error(&analytic, &numeric))
}

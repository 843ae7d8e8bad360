use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: Real,
    pub beta1: Real,
    pub beta2: Real,
    pub epsilon: Real,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for a fixed list of parameter arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Vec<Real>>,
    pub v: Vec<Vec<Real>>,
}

impl AdamState {
    /// Fresh state for arrays of the given lengths.
    pub fn new(lengths: &[usize], config: AdamConfig) -> Result<Self> {
        let c = config;
        let unit = |b: Real| b > 0.0 && b < 1.0;
        if !(c.lr > 0.0 && c.lr.is_finite() && unit(c.beta1) && unit(c.beta2) && c.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "Adam needs lr > 0, betas in (0, 1) and epsilon > 0; got {c:?}"
            )));
        }
        Ok(AdamState {
            config,
            t: 0,
            m: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            v: lengths.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }
}

/// One bias-corrected Adam update of every array in `params`.
pub fn adam_step(params: &mut [&mut [Real]], grads: &[&[Real]], s: &mut AdamState) -> Result<()> {
    if params.len() != s.m.len() || grads.len() != s.m.len() {
        return Err(Error::Contract(format!(
            "Adam state tracks {} arrays; got {} parameters and {} gradients",
            s.m.len(),
            params.len(),
            grads.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != s.m[i].len() || g.len() != s.m[i].len() {
            return Err(Error::Contract(format!(
                "array {i}: state length {}, parameter {}, gradient {}",
                s.m[i].len(),
                p.len(),
                g.len()
            )));
        }
    }
    s.t += 1;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
    } = s.config;
    let c1 = 1.0 - beta1.powi(s.t as i32);
    let c2 = 1.0 - beta2.powi(s.t as i32);
    for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(s.m.iter_mut().zip(s.v.iter_mut())) {
        for j in 0..p.len() {
            m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(n: usize) -> AdamState {
        AdamState::new(&[n], AdamConfig::default()).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = state(3);
        let mut p = vec![1.0, -2.0, 3.0];
        adam_step(&mut [&mut p[..]], &[&[0.0; 3][..]], &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_unit_gradient_moves_by_lr() {
        let mut s = state(1);
        let mut p = vec![0.5];
        adam_step(&mut [&mut p[..]], &[&[1.0][..]], &mut s).unwrap();
        // m̂ = v̂ = 1 at t = 1
        let step = 0.5 - p[0];
        assert!((step - 1e-3 / (1.0 + 1e-8)).abs() < 1e-12);
    }

    #[test]
    fn identical_states_step_identically() {
        let mut a = state(2);
        let mut b = a.clone();
        let (mut pa, mut pb) = (vec![0.3, 0.7], vec![0.3, 0.7]);
        for g in [[0.1, -0.4], [2.0, 0.0]] {
            adam_step(&mut [&mut pa[..]], &[&g[..]], &mut a).unwrap();
            adam_step(&mut [&mut pb[..]], &[&g[..]], &mut b).unwrap();
        }
        assert_eq!(pa, pb);
        assert_eq!(a, b);
        assert_eq!(a.t, 2);
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        let mut s = state(2);
        let mut p = vec![0.0; 3];
        assert!(adam_step(&mut [&mut p[..]], &[&[0.0; 3][..]], &mut s).is_err());
        assert_eq!(s.t, 0);
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        let bad = AdamConfig {
            beta1: 1.0,
            ..AdamConfig::default()
        };
        assert!(AdamState::new(&[1], bad).is_err());
    }
}

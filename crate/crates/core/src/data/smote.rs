//! Synthetic minority oversampling.
//!
//! Every class below the majority count is topped up with synthetic rows
//! `x + λ·(x_nn − x)`, where `x` is a random member of the class, `x_nn` one
//! of its `k` nearest same-class neighbors (Euclidean) and `λ ~ U[0, 1)`.
//! Originals are kept, in order, ahead of the synthetic rows.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Real;

pub const DEFAULT_K_NEIGHBORS: usize = 5;

/// Provenance of one synthetic row; indices refer to rows of the input.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSample {
    pub base: usize,
    pub neighbor: usize,
    pub lambda: Real,
}

#[derive(Clone, Debug)]
pub struct Oversampled {
    pub dataset: Dataset,
    /// One entry per appended row, in order.
    pub synthetic: Vec<SyntheticSample>,
}

fn squared_distance(a: &[Real], b: &[Real]) -> Real {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest members of `members` to `members[i]`, excluding itself.
/// Ties break toward the lower row index.
fn nearest(d: &Dataset, members: &[usize], i: usize, k: usize) -> Vec<usize> {
    let x = d.row(members[i]);
    let mut cand: Vec<(Real, usize)> = members
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &r)| (squared_distance(x, d.row(r)), r))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.truncate(k);
    cand.into_iter().map(|(_, r)| r).collect()
}

pub fn smote_oversample(train: &Dataset, k_neighbors: usize, seed: u64) -> Result<Oversampled> {
    if k_neighbors == 0 {
        return Err(Error::Contract("SMOTE needs k_neighbors ≥ 1".into()));
    }
    let counts = train.class_counts();
    let majority = counts.iter().copied().max().unwrap_or(0);
    for (c, &n) in counts.iter().enumerate() {
        if n < majority && n < 2 {
            return Err(Error::Contract(format!(
                "class '{}' has {n} sample(s); SMOTE needs at least 2 to interpolate",
                train.encoder.decode(c).unwrap_or("?")
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = train.clone();
    let mut synthetic = Vec::new();
    let groups = train.indices_by_class();
    for (&class, members) in &groups {
        let deficit = majority - members.len();
        if deficit == 0 {
            continue;
        }
        let k = k_neighbors.min(members.len() - 1);
        let neighbors: Vec<Vec<usize>> = (0..members.len()).map(|i| nearest(train, members, i, k)).collect();
        let mut rows = Vec::with_capacity(deficit * train.n_features());
        for _ in 0..deficit {
            let bi = rng.gen_range(0..members.len());
            let nn = neighbors[bi][rng.gen_range(0..k)];
            let lambda: Real = rng.gen::<f64>() as Real;
            let (x, y) = (train.row(members[bi]), train.row(nn));
            rows.extend(x.iter().zip(y).map(|(a, b)| a + lambda * (b - a)));
            synthetic.push(SyntheticSample {
                base: members[bi],
                neighbor: nn,
                lambda,
            });
        }
        out.extend(&rows, &vec![class; deficit]);
    }
    Ok(Oversampled {
        dataset: out,
        synthetic,
    })
}

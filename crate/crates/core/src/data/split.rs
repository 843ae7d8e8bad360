use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};

/// A disjoint train/test partition. The index vectors refer to rows of the
/// dataset that was split.
#[derive(Clone, Debug)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub fraction: f64,
}

/// Splits `n` items so that `round(fraction·n)` go to the first part, with
/// per-group shares that each stay within one of `fraction·group_size`
/// (largest-remainder apportionment, ties to the lower group index).
fn apportion(sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = sizes.iter().map(|&s| fraction * s as f64).collect();
    let mut shares: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(shares.iter().sum());
    for &g in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        if shares[g] < sizes[g] {
            shares[g] += 1;
            missing -= 1;
        }
    }
    shares
}

/// Seeded random split. Stratified mode keeps every class's train share
/// within one sample of `fraction` of that class.
pub fn train_test_split(d: &Dataset, fraction: f64, seed: u64, stratified: bool) -> Result<SplitPair> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Contract(format!("split fraction {fraction} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train_idx, mut test_idx) = (Vec::new(), Vec::new());
    if stratified {
        let groups = d.indices_by_class();
        if let Some((c, rows)) = groups.iter().find(|(_, rows)| rows.len() < 2) {
            return Err(Error::Contract(format!(
                "class '{}' has {} sample(s); stratified splitting needs at least 2",
                d.encoder.decode(*c).unwrap_or("?"),
                rows.len()
            )));
        }
        let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
        let shares = apportion(&sizes, fraction);
        for (rows, share) in groups.into_values().zip(shares) {
            let mut rows = rows;
            rows.shuffle(&mut rng);
            test_idx.extend_from_slice(&rows[share..]);
            rows.truncate(share);
            train_idx.extend(rows);
        }
        train_idx.shuffle(&mut rng);
        test_idx.shuffle(&mut rng);
    } else {
        let mut rows: Vec<usize> = (0..d.len()).collect();
        rows.shuffle(&mut rng);
        let cut = (fraction * d.len() as f64).round() as usize;
        test_idx = rows.split_off(cut);
        train_idx = rows;
    }
    Ok(SplitPair {
        train: d.subset(&train_idx),
        test: d.subset(&test_idx),
        train_indices: train_idx,
        test_indices: test_idx,
        fraction,
    })
}

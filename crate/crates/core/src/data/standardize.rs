use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Per-feature z-score fitted on a training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<Real>,
    /// `1/σ`, or 0 for a constant feature (which then maps to 0 everywhere).
    pub inv_std: Vec<Real>,
}

impl Standardizer {
    pub fn fit(d: &Dataset) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::Input("cannot fit standardization on an empty dataset".into()));
        }
        let f = d.n_features();
        let n = d.len() as Real;
        let mut mean = vec![0.0; f];
        for i in 0..d.len() {
            mean.iter_mut().zip(d.row(i)).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; f];
        for i in 0..d.len() {
            for ((v, x), m) in var.iter_mut().zip(d.row(i)).zip(&mean) {
                *v += (x - m).powi(2);
            }
        }
        let inv_std = var
            .iter()
            .zip(&d.feature_names)
            .map(|(v, name)| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 * (1.0 + mean.iter().map(|m| m.abs()).fold(0.0, Real::max)) {
                    1.0 / sd
                } else {
                    log::warn!("feature '{name}' has zero variance; it is standardized to 0");
                    0.0
                }
            })
            .collect();
        Ok(Standardizer { mean, inv_std })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Standardized features as a `[N × F × 1]` model input.
    pub fn transform(&self, d: &Dataset) -> Result<Tensor> {
        if d.n_features() != self.n_features() {
            return Err(Error::Config(format!(
                "feature width mismatch: expected {} features, data has {}",
                self.n_features(),
                d.n_features()
            )));
        }
        let f = self.n_features();
        let data: Vec<Real> = d
            .features()
            .iter()
            .enumerate()
            .map(|(i, x)| (x - self.mean[i % f]) * self.inv_std[i % f])
            .collect();
        Tensor::new(vec![d.len().max(1), f, 1], data)
    }
}

/// Standardizes with `scaler` (fitted on the training split) and adds the
/// trailing channel axis.
pub fn reshape_for_model(d: &Dataset, scaler: &Standardizer) -> Result<Tensor> {
    if d.is_empty() {
        return Err(Error::Input("cannot shape an empty dataset for the model".into()));
    }
    scaler.transform(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelEncoder;

    fn ds(rows: &[[Real; 3]]) -> Dataset {
        Dataset::new(
            rows.concat(),
            3,
            vec![0; rows.len()],
            LabelEncoder::fit(["a"]),
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap()
    }

    #[test]
    fn train_means_vanish_and_shape_gains_channel() {
        let train = ds(&[[1.0, 10.0, 5.0], [2.0, 30.0, 5.0], [6.0, -4.0, 5.0]]);
        let s = Standardizer::fit(&train).unwrap();
        let t = reshape_for_model(&train, &s).unwrap();
        assert_eq!(t.shape(), &[3, 3, 1]);
        for j in 0..3 {
            let m: Real = (0..3).map(|i| t.at(&[i, j, 0])).sum::<Real>() / 3.0;
            assert!(m.abs() < 1e-6);
        }
        // constant feature maps to zero
        assert!((0..3).all(|i| t.at(&[i, 2, 0]) == 0.0));
    }

    #[test]
    fn test_split_uses_train_statistics() {
        let train = ds(&[[0.0, 0.0, 1.0], [2.0, 4.0, 3.0]]);
        let test = ds(&[[1.0, 2.0, 2.0], [5.0, 5.0, 5.0]]);
        let s = Standardizer::fit(&train).unwrap();
        let t = reshape_for_model(&test, &s).unwrap();
        // the first test row equals the train mean, so it maps to zeros
        assert_eq!(&t.data()[..3], &[0.0, 0.0, 0.0]);
        assert!((t.at(&[1, 0, 0]) - 4.0).abs() < 1e-12);
    }
}

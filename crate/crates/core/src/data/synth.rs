//! Seeded synthetic classification data.
//!
//! Each class is a Gaussian cluster with unit-variance white noise around a
//! centroid `μ_c = separation·√2·u_c`, where the `u_c` are orthonormal
//! random directions. Any two centroids are then `2·separation` apart, so
//! every pairwise nearest-centroid boundary sits `separation` noise standard
//! deviations from each centroid.
//!
//! The optional sequence signal adds `a·sin(ω_c·t + φ)` along the feature
//! axis with a class-specific frequency `ω_c` and a per-sample random phase
//! `φ`. The phase makes the signal invisible to per-feature means, so only
//! models that look at local structure along the axis can exploit it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, LabelEncoder};
use crate::error::{Error, Result};
use crate::tensor::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub classes: usize,
    pub features: usize,
    /// Samples of the largest class.
    pub per_class: usize,
    /// Relative class sizes; shorter profiles repeat their last entry and an
    /// empty profile means balanced.
    pub imbalance_profile: Vec<f64>,
    /// Centroid-to-boundary distance in noise standard deviations.
    pub separation: f64,
    /// Amplitude of the class-frequency sinusoid (0 disables it).
    pub sequence_amplitude: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 6,
            features: 60,
            per_class: 500,
            imbalance_profile: Vec::new(),
            separation: 5.0,
            sequence_amplitude: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Per-class sample counts after applying the imbalance profile.
    pub fn class_sizes(&self) -> Vec<usize> {
        let ratios: Vec<f64> = (0..self.classes)
            .map(|c| match self.imbalance_profile.get(c).or(self.imbalance_profile.last()) {
                Some(&r) => r,
                None => 1.0,
            })
            .collect();
        let top = ratios.iter().copied().fold(0.0, f64::max);
        ratios
            .iter()
            .map(|r| (self.per_class as f64 * r / top).round() as usize)
            .collect()
    }

    /// Angular frequency of class `c`, spread evenly over `(0, π)`.
    pub fn frequency(&self, c: usize) -> f64 {
        PI * (c + 1) as f64 / (self.classes + 1) as f64
    }

    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config("synthetic data needs at least 2 classes".into()));
        }
        if self.features == 0 {
            return Err(Error::Config("synthetic data needs at least 1 feature".into()));
        }
        if self.per_class < 2 {
            return Err(Error::Config("per_class must be at least 2".into()));
        }
        if self.imbalance_profile.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Config("imbalance ratios must be positive".into()));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::Config("separation must be a non-negative number".into()));
        }
        if !self.sequence_amplitude.is_finite() {
            return Err(Error::Config("sequence amplitude must be finite".into()));
        }
        if let Some((c, _)) = self.class_sizes().iter().enumerate().find(|(_, &n)| n < 2) {
            return Err(Error::Config(format!(
                "imbalance profile leaves class {c} with fewer than 2 samples"
            )));
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<String> {
        let width = (self.classes - 1).to_string().len();
        (0..self.classes).map(|c| format!("class_{c:0width$}")).collect()
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Orthonormal directions by Gram–Schmidt on Gaussian vectors; once the
/// dimension runs out the remaining directions are just random unit vectors.
fn directions(count: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        if out.len() < dim {
            for u in &out {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        out.push(v);
    }
    out
}

/// Class centroids (without the sequence signal), for oracles.
pub fn centroids(cfg: &SynthConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = cfg.separation * 2f64.sqrt();
    directions(cfg.classes, cfg.features, &mut rng)
        .into_iter()
        .map(|u| u.into_iter().map(|x| x * scale).collect())
        .collect()
}

pub fn synth_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = cfg.separation * 2f64.sqrt();
    let mu: Vec<Vec<f64>> = directions(cfg.classes, cfg.features, &mut rng)
        .into_iter()
        .map(|u| u.into_iter().map(|x| x * scale).collect())
        .collect();
    let sizes = cfg.class_sizes();
    let total: usize = sizes.iter().sum();
    let mut features = Vec::with_capacity(total * cfg.features);
    let mut labels = Vec::with_capacity(total);
    for (c, &n) in sizes.iter().enumerate() {
        let w = cfg.frequency(c);
        for _ in 0..n {
            let phase = rng.gen::<f64>() * 2.0 * PI;
            for (t, m) in mu[c].iter().enumerate() {
                let wave = cfg.sequence_amplitude * (w * t as f64 + phase).sin();
                features.push((m + wave + gaussian(&mut rng)) as Real);
            }
            labels.push(c);
        }
    }
    let names = cfg.class_names();
    let encoder = LabelEncoder::fit(names.iter().map(String::as_str));
    let width = (cfg.features - 1).to_string().len().max(3);
    let feature_names = (0..cfg.features).map(|j| format!("f{j:0width$}")).collect();
    Dataset::new(features, cfg.features, labels, encoder, feature_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nearest_centroid(cfg: &SynthConfig, d: &Dataset) -> f64 {
        let mu = centroids(cfg);
        let hits = (0..d.len())
            .filter(|&i| {
                let x = d.row(i);
                let best = (0..mu.len())
                    .min_by(|&a, &b| {
                        let da: f64 = x.iter().zip(&mu[a]).map(|(p, q)| (*p as f64 - q).powi(2)).sum();
                        let db: f64 = x.iter().zip(&mu[b]).map(|(p, q)| (*p as f64 - q).powi(2)).sum();
                        da.total_cmp(&db)
                    })
                    .unwrap();
                best == d.labels()[i]
            })
            .count();
        hits as f64 / d.len() as f64
    }

    #[test]
    fn five_sigma_is_separable_by_nearest_centroid() {
        let cfg = SynthConfig {
            per_class: 200,
            seed: 3,
            ..SynthConfig::default()
        };
        let d = synth_dataset(&cfg).unwrap();
        assert_eq!(nearest_centroid(&cfg, &d), 1.0);
    }

    #[test]
    fn centroids_are_equidistant() {
        let cfg = SynthConfig::default();
        let mu = centroids(&cfg);
        for a in 0..6 {
            for b in a + 1..6 {
                let dist: f64 = mu[a].iter().zip(&mu[b]).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                assert!((dist - 10.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn imbalance_profile_scales_counts() {
        let cfg = SynthConfig {
            per_class: 100,
            imbalance_profile: vec![1.0, 0.1, 0.5],
            ..SynthConfig::default()
        };
        let d = synth_dataset(&cfg).unwrap();
        assert_eq!(d.class_counts(), vec![100, 10, 50, 50, 50, 50]);
    }

    #[test]
    fn same_seed_same_data() {
        let cfg = SynthConfig {
            per_class: 10,
            seed: 9,
            ..SynthConfig::default()
        };
        assert_eq!(synth_dataset(&cfg).unwrap(), synth_dataset(&cfg).unwrap());
        let other = SynthConfig { seed: 10, ..cfg.clone() };
        assert_ne!(synth_dataset(&cfg).unwrap(), synth_dataset(&other).unwrap());
    }

    #[test]
    fn shape_and_names() {
        let cfg = SynthConfig {
            per_class: 4,
            ..SynthConfig::default()
        };
        let d = synth_dataset(&cfg).unwrap();
        assert_eq!((d.len(), d.n_features(), d.n_classes()), (24, 60, 6));
        assert_eq!(d.encoder.class_names()[0], "class_0");
        assert_eq!(d.feature_names[7], "f007");
    }

    #[test]
    fn tiny_class_is_rejected() {
        let cfg = SynthConfig {
            per_class: 1,
            ..SynthConfig::default()
        };
        assert!(synth_dataset(&cfg).is_err());
    }
}

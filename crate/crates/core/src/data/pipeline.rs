//! Split → validation carve → oversample → standardize.
//!
//! The validation subset is taken out of the training split before SMOTE,
//! so neither validation nor test rows ever contain synthetic samples, and
//! the standardizer is fitted on the (oversampled) training rows only.

use serde::{Deserialize, Serialize};

use super::{
    smote_oversample, train_test_split, Dataset, Fingerprint, Standardizer, TableSchema, DEFAULT_K_NEIGHBORS,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub train_fraction: f64,
    /// Share of the training split held out for per-epoch validation.
    pub validation_fraction: f64,
    pub stratified: bool,
    pub use_smote: bool,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            train_fraction: 0.8,
            validation_fraction: 0.1,
            stratified: true,
            use_smote: true,
            k_neighbors: DEFAULT_K_NEIGHBORS,
            seed: 0,
        }
    }
}

/// Everything needed to encode new data the way the training data was
/// encoded. Stored inside checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub schema: Option<TableSchema>,
    pub standardizer: Standardizer,
    pub options: PipelineOptions,
    /// Where the training data came from, when it was a file.
    #[serde(default)]
    pub source: Option<DataSource>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub path: String,
    pub fingerprint: Fingerprint,
}

#[derive(Clone, Debug)]
pub struct Prepared {
    /// Training rows after oversampling (raw scale).
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    /// Rows of the input dataset that ended up in the test split.
    pub test_indices: Vec<usize>,
    pub train_counts_before_smote: Vec<usize>,
    pub synthetic_count: usize,
    pub preprocessing: Preprocessing,
}

pub fn prepare(d: &Dataset, schema: Option<TableSchema>, opts: &PipelineOptions) -> Result<Prepared> {
    if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {} outside (0, 1)", opts.train_fraction)));
    }
    if !(opts.validation_fraction > 0.0 && opts.validation_fraction < 1.0) {
        return Err(Error::Config(format!(
            "validation fraction {} outside (0, 1)",
            opts.validation_fraction
        )));
    }
    let outer = train_test_split(d, opts.train_fraction, opts.seed, opts.stratified)?;
    let inner = train_test_split(
        &outer.train,
        1.0 - opts.validation_fraction,
        opts.seed.wrapping_add(1),
        opts.stratified,
    )?;
    if inner.test.is_empty() || inner.train.is_empty() || outer.test.is_empty() {
        return Err(Error::Input(format!("{} rows are too few to split", d.len())));
    }
    let before = inner.train.class_counts();
    let (train, synthetic_count) = if opts.use_smote {
        let o = smote_oversample(&inner.train, opts.k_neighbors, opts.seed.wrapping_add(2))?;
        let n = o.synthetic.len();
        (o.dataset, n)
    } else {
        (inner.train, 0)
    };
    let standardizer = Standardizer::fit(&train)?;
    Ok(Prepared {
        train,
        validation: inner.test,
        test: outer.test,
        test_indices: outer.test_indices,
        train_counts_before_smote: before,
        synthetic_count,
        preprocessing: Preprocessing {
            schema,
            standardizer,
            options: opts.clone(),
            source: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SynthConfig};

    fn imbalanced() -> Dataset {
        synth_dataset(&SynthConfig {
            per_class: 100,
            imbalance_profile: vec![1.0, 0.2],
            features: 8,
            classes: 3,
            seed: 4,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn test_rows_are_original_and_train_is_balanced() {
        let d = imbalanced();
        let p = prepare(&d, None, &PipelineOptions::default()).unwrap();
        for (k, &orig) in p.test_indices.iter().enumerate() {
            assert_eq!(p.test.row(k), d.row(orig));
        }
        let counts = p.train.class_counts();
        assert!(counts.iter().all(|&c| c == counts[0]));
        assert!(p.synthetic_count > 0);
        assert_eq!(p.test.len(), (0.2f64 * d.len() as f64).round() as usize);
    }

    #[test]
    fn no_smote_keeps_imbalance() {
        let d = imbalanced();
        let opts = PipelineOptions {
            use_smote: false,
            ..PipelineOptions::default()
        };
        let p = prepare(&d, None, &opts).unwrap();
        assert_eq!(p.synthetic_count, 0);
        assert_eq!(p.train.class_counts(), p.train_counts_before_smote);
        assert!(p.train.class_counts()[1] < p.train.class_counts()[0]);
    }

    #[test]
    fn bad_fraction_is_config_error() {
        let opts = PipelineOptions {
            train_fraction: 1.0,
            ..PipelineOptions::default()
        };
        assert!(matches!(prepare(&imbalanced(), None, &opts), Err(Error::Config(_))));
    }
}

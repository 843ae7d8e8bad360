//! Dataset ingestion, splitting, oversampling and synthetic data.

mod csv_io;
mod dataset;
mod pipeline;
mod smote;
mod split;
mod standardize;
mod synth;

pub use csv_io::{
    load_csv, parse_table, read_table, write_csv, ColumnKind, FeatureColumn, Loaded, NumericPolicy, RawTable,
    TableSchema,
};
pub use dataset::{Dataset, LabelEncoder};
pub use pipeline::{prepare, DataSource, PipelineOptions, Prepared, Preprocessing};
pub use smote::{smote_oversample, Oversampled, SyntheticSample, DEFAULT_K_NEIGHBORS};
pub use split::{train_test_split, SplitPair};
pub use standardize::{reshape_for_model, Standardizer};
pub use synth::{centroids, synth_dataset, SynthConfig};

use sha2::{Digest, Sha256};

/// Row count, column count and a SHA-256 over labels and feature bits.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Fingerprint {
    pub rows: usize,
    pub columns: usize,
    pub sha256: String,
}

impl Dataset {
    pub fn fingerprint(&self) -> Fingerprint {
        let mut h = Sha256::new();
        for name in &self.feature_names {
            h.update(name.as_bytes());
            h.update([0]);
        }
        for name in self.encoder.class_names() {
            h.update(name.as_bytes());
            h.update([0]);
        }
        for v in self.features() {
            h.update((*v as f64).to_le_bytes());
        }
        for &y in self.labels() {
            h.update((y as u64).to_le_bytes());
        }
        Fingerprint {
            rows: self.len(),
            columns: self.n_features(),
            sha256: format!("{:x}", h.finalize()),
        }
    }
}

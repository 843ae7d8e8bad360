//! The `idsnet` command-line harness: synthetic data generation, training,
//! evaluation and the ablation grid, each leaving a run manifest next to its
//! outputs.

pub mod commands;
pub mod manifest;
pub mod settings;

pub use manifest::RunManifest;
pub use settings::Settings;

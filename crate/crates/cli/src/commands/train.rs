use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use idsnet_core::data::{prepare, DataSource};
use idsnet_core::model::{Checkpoint, Model, ModelConfig};
use idsnet_core::train::{self as trainer, write_epoch_csv, EpochRecord, Samples};
use serde_json::json;

use super::{DataArgs, SettingsArgs};
use crate::manifest::RunManifest;
use crate::settings::Settings;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const EPOCHS_FILE: &str = "epochs.csv";

#[derive(Args, Clone, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[command(flatten)]
    pub settings: SettingsArgs,
    /// Train on the imbalanced split as is.
    #[arg(long)]
    pub no_smote: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub struct TrainOutcome {
    pub model: Model,
    pub checkpoint: Checkpoint,
    pub checkpoint_sha256: String,
    pub records: Vec<EpochRecord>,
    pub manifest: RunManifest,
}

/// Model settings with the input width and class count taken from the data.
pub(crate) fn model_for(settings: &Settings, n_features: usize, n_classes: usize) -> ModelConfig {
    ModelConfig {
        time_steps: n_features,
        channels: 1,
        num_classes: n_classes,
        ..settings.model.clone()
    }
}

pub fn train(a: &TrainArgs) -> Result<TrainOutcome> {
    let mut settings = a.settings.resolve().context("config")?;
    if a.no_smote {
        settings.model.use_smote = false;
        settings.sync();
    }
    let mut manifest = RunManifest::start("train", settings.train.seed);
    super::ensure_dir(&a.out_dir)?;

    let loaded = a.input.load()?;
    let data = &loaded.dataset;
    let fingerprint = data.fingerprint();
    let cfg = model_for(&settings, data.n_features(), data.n_classes());
    cfg.validate().context("config")?;
    settings.model = cfg.clone();

    let mut prepared = prepare(data, Some(loaded.schema.clone()), &settings.pipeline).context("split")?;
    prepared.preprocessing.source = Some(DataSource {
        path: a.input.data.display().to_string(),
        fingerprint: fingerprint.clone(),
    });
    let scaler = &prepared.preprocessing.standardizer;
    let train_set = Samples::from_dataset(&prepared.train, scaler).context("standardize")?;
    let val_set = Samples::from_dataset(&prepared.validation, scaler).context("standardize")?;

    let mut model = Model::build(&cfg, settings.train.seed).context("build")?;
    log::info!(
        "training {} ({} parameters) on {} rows, validating on {}",
        cfg.label(),
        model.parameter_count(),
        train_set.len(),
        val_set.len()
    );
    let records = trainer::train(&mut model, &train_set, &val_set, &settings.train, |_| {}).context("train")?;

    let checkpoint = Checkpoint::from_model(&model, Some(prepared.preprocessing.clone()));
    checkpoint.save(a.out_dir.join(CHECKPOINT_FILE)).context("save")?;
    let checkpoint_sha256 = checkpoint.hash()?;
    write_epoch_csv(&records, a.out_dir.join(EPOCHS_FILE)).context("save")?;

    manifest.config = serde_json::to_value(&settings)?;
    manifest.dataset = Some(fingerprint);
    manifest.artifacts = vec![CHECKPOINT_FILE.into(), EPOCHS_FILE.into()];
    manifest.details = json!({
        "data": a.input.data.display().to_string(),
        "smote": settings.pipeline.use_smote,
        "dropped_rows": loaded.dropped,
        "class_names": data.encoder.class_names(),
        "train_class_counts_before_smote": prepared.train_counts_before_smote,
        "train_class_counts": prepared.train.class_counts(),
        "synthetic_rows": prepared.synthetic_count,
        "validation_rows": prepared.validation.len(),
        "test_rows": prepared.test.len(),
        "parameters": model.parameter_count(),
        "checkpoint_sha256": checkpoint_sha256,
    });
    let manifest = manifest.finish(&a.out_dir)?;
    Ok(TrainOutcome {
        model,
        checkpoint,
        checkpoint_sha256,
        records,
        manifest,
    })
}

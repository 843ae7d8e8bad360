//! Flat `key = value` run settings.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value      # trailing comments are allowed too
//! ```
//!
//! Keys are case-sensitive; an unknown key or a value that does not parse
//! is an error naming the line. Later lines override earlier ones, and
//! command-line flags override the file.
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `use_resnet_block`, `use_bigru`, `use_mha`, `use_smote` | bool | true |
//! | `conv_filters` | int | 64 |
//! | `kernel_size` | int | 3 |
//! | `gru_units` | int | 64 |
//! | `num_heads` | int | 4 |
//! | `key_dim` | int | 64 |
//! | `dropout_rate` | real | 0.5 |
//! | `dense_units` | comma list | 64,32 |
//! | `epochs` | int | 15 |
//! | `batch_size` | int | 128 |
//! | `lr`, `beta1`, `beta2`, `epsilon` | real | 0.001, 0.9, 0.999, 1e-8 |
//! | `seed` | int | 0 |
//! | `train_fraction` | real | 0.8 |
//! | `validation_fraction` | real | 0.1 |
//! | `stratified` | bool | true |
//! | `k_neighbors` | int | 5 |
//!
//! Booleans accept `true/false`, `yes/no`, `on/off` and `1/0`. Input width
//! and class count always come from the data.

use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use idsnet_core::data::PipelineOptions;
use idsnet_core::model::ModelConfig;
use idsnet_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub pipeline: PipelineOptions,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            pipeline: PipelineOptions::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("invalid value '{value}' for {key}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => bail!("invalid boolean '{value}' for {key}"),
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (m, t, p) = (&mut self.model, &mut self.train, &mut self.pipeline);
        match key {
            "use_resnet_block" => m.use_resnet_block = parse_bool(key, value)?,
            "use_bigru" => m.use_bigru = parse_bool(key, value)?,
            "use_mha" => m.use_mha = parse_bool(key, value)?,
            "use_smote" => m.use_smote = parse_bool(key, value)?,
            "conv_filters" => m.conv_filters = parse(key, value)?,
            "kernel_size" => m.kernel_size = parse(key, value)?,
            "gru_units" => m.gru_units = parse(key, value)?,
            "num_heads" => m.num_heads = parse(key, value)?,
            "key_dim" => m.key_dim = parse(key, value)?,
            "dropout_rate" => m.dropout_rate = parse(key, value)?,
            "dense_units" => {
                m.dense_units = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "epochs" => t.epochs = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "lr" => t.lr = parse(key, value)?,
            "beta1" => t.beta1 = parse(key, value)?,
            "beta2" => t.beta2 = parse(key, value)?,
            "epsilon" => t.epsilon = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "validation_fraction" => t.validation_fraction = parse(key, value)?,
            "train_fraction" => p.train_fraction = parse(key, value)?,
            "stratified" => p.stratified = parse_bool(key, value)?,
            "k_neighbors" => p.k_neighbors = parse(key, value)?,
            _ => bail!("unknown setting '{key}'"),
        }
        Ok(())
    }

    /// Applies `key = value` lines from `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value'", n + 1))?;
            self.set(k.trim(), v.trim()).with_context(|| format!("line {}", n + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_text(&text).with_context(|| format!("config {}", path.display()))
    }

    /// Applies `key=value` overrides such as those given with `--set`.
    pub fn apply_overrides(&mut self, pairs: &[String]) -> Result<()> {
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| anyhow!("override '{pair}' is not key=value"))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Copies the values the pipeline shares with the other sections.
    pub fn sync(&mut self) {
        self.pipeline.use_smote = self.model.use_smote;
        self.pipeline.seed = self.train.seed;
        self.pipeline.validation_fraction = self.train.validation_fraction;
    }

    /// The settings as `key = value` text that [`Settings::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let (m, t, p) = (&self.model, &self.train, &self.pipeline);
        let units: Vec<String> = m.dense_units.iter().map(usize::to_string).collect();
        [
            format!("use_resnet_block = {}", m.use_resnet_block),
            format!("use_bigru = {}", m.use_bigru),
            format!("use_mha = {}", m.use_mha),
            format!("use_smote = {}", m.use_smote),
            format!("conv_filters = {}", m.conv_filters),
            format!("kernel_size = {}", m.kernel_size),
            format!("gru_units = {}", m.gru_units),
            format!("num_heads = {}", m.num_heads),
            format!("key_dim = {}", m.key_dim),
            format!("dropout_rate = {}", m.dropout_rate),
            format!("dense_units = {}", units.join(",")),
            format!("epochs = {}", t.epochs),
            format!("batch_size = {}", t.batch_size),
            format!("lr = {}", t.lr),
            format!("beta1 = {}", t.beta1),
            format!("beta2 = {}", t.beta2),
            format!("epsilon = {}", t.epsilon),
            format!("seed = {}", t.seed),
            format!("validation_fraction = {}", t.validation_fraction),
            format!("train_fraction = {}", p.train_fraction),
            format!("stratified = {}", p.stratified),
            format!("k_neighbors = {}", p.k_neighbors),
        ]
        .join("\n")
            + "\n"
    }
}

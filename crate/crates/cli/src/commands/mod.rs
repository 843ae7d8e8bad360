mod ablate;
mod eval;
mod gen_data;
mod train;

pub use ablate::{ablate, AblateArgs, AblationOutcome, AblationRow, ABLATION_CSV_HEADER};
pub use eval::{eval, EvalArgs, EvalReport, EvalSplit, Latency};
pub use gen_data::{gen_data, parse_ratio, GenDataArgs};
pub use train::{train, TrainArgs, TrainOutcome};

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use idsnet_core::data::{read_table, Loaded, NumericPolicy, TableSchema};

use crate::settings::Settings;

/// Input file flags shared by `train` and `ablate`.
#[derive(Args, Clone, Debug)]
pub struct DataArgs {
    /// Delimited text file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column holding the class names.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Field separator; `tab` for tab-separated files.
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    /// `auto` label-encodes mostly non-numeric columns; `strict` requires numbers.
    #[arg(long, default_value = "auto")]
    pub numeric_policy: String,
}

/// Settings flags shared by `train` and `ablate`.
#[derive(Args, Clone, Debug, Default)]
pub struct SettingsArgs {
    /// Flat `key = value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SettingsArgs {
    pub fn resolve(&self) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        s.apply_overrides(&self.set)?;
        if let Some(v) = self.epochs {
            s.train.epochs = v;
        }
        if let Some(v) = self.batch_size {
            s.train.batch_size = v;
        }
        if let Some(v) = self.lr {
            s.train.lr = v as idsnet_core::Real;
        }
        if let Some(v) = self.seed {
            s.train.seed = v;
        }
        s.sync();
        Ok(s)
    }
}

pub fn parse_delimiter(text: &str) -> Result<u8> {
    match text {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        s => bail!("delimiter must be a single ASCII character, got '{s}'"),
    }
}

pub fn parse_policy(text: &str) -> Result<NumericPolicy> {
    match text {
        "auto" => Ok(NumericPolicy::Auto),
        "strict" => Ok(NumericPolicy::Strict),
        s => bail!("numeric policy must be 'auto' or 'strict', got '{s}'"),
    }
}

impl DataArgs {
    /// Reads and encodes the file, inferring a fresh schema.
    pub fn load(&self) -> Result<Loaded> {
        let delim = parse_delimiter(&self.delimiter)?;
        let policy = parse_policy(&self.numeric_policy)?;
        let table = read_table(&self.data, delim).context("load")?;
        let schema = TableSchema::infer(&table, &self.label_column, policy).context("encode")?;
        let loaded = schema.apply(&table).context("encode")?;
        if loaded.dataset.n_classes() < 2 {
            bail!("encode: {} holds a single class; at least 2 are needed", self.data.display());
        }
        Ok(loaded)
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub(crate) fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use idsnet_core::data::{prepare, read_table};
use idsnet_core::metrics::{class_report, confusion, roc_auc, write_roc_csv, ClassReport};
use idsnet_core::model::Checkpoint;
use idsnet_core::train::{evaluate, measure_inference, Samples};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{parse_delimiter, write_json};
use crate::manifest::RunManifest;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const CONFUSION_CSV: &str = "confusion.csv";
pub const ROC_CSV: &str = "roc.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    /// Every row of the file.
    All,
    /// The held-out rows the training run never saw.
    Test,
    /// The training rows, oversampled as during training.
    Train,
}

#[derive(Args, Clone, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Data to score; defaults to the file the checkpoint was trained on.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Rows to score. Defaults to `all` with `--data` and `test` without.
    #[arg(long, value_enum)]
    pub split: Option<EvalSplit>,
    #[arg(long, default_value = ",")]
    pub delimiter: String,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    /// Timed passes per latency measurement (at least 10).
    #[arg(long, default_value_t = 20)]
    pub timing_reps: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub batch_1_seconds_per_instance: f64,
    pub batch_64_seconds_per_instance: f64,
    pub repetitions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAuc {
    pub class: String,
    /// Absent when the class has no positive or no negative rows.
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub checkpoint: String,
    pub checkpoint_sha256: String,
    pub data: String,
    pub split: EvalSplit,
    pub samples: usize,
    pub loss: f64,
    pub report: ClassReport,
    pub auc: Vec<ClassAuc>,
    pub confusion: Vec<Vec<u64>>,
    pub latency: Latency,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "checkpoint {}\ndata {} ({:?} split, {} rows)\n\n",
            self.checkpoint, self.data, self.split, self.samples
        );
        out.push_str(&self.report.to_table());
        out.push('\n');
        for a in &self.auc {
            let v = a.auc.map_or("undefined".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(out, "auc {:<16} {v}", a.class);
        }
        let _ = writeln!(
            out,
            "\nloss {:.6}\nlatency batch 1: {:.3e} s/instance\nlatency batch 64: {:.3e} s/instance",
            self.loss, self.latency.batch_1_seconds_per_instance, self.latency.batch_64_seconds_per_instance
        );
        out
    }
}

pub fn eval(a: &EvalArgs) -> Result<EvalReport> {
    let mut manifest = RunManifest::start("eval", 0);
    super::ensure_dir(&a.out_dir)?;
    let ck = Checkpoint::load(&a.checkpoint).context("checkpoint")?;
    let model = ck.to_model().context("checkpoint")?;
    let prep = ck
        .preprocessing
        .as_ref()
        .ok_or_else(|| anyhow!("checkpoint: no preprocessing state stored"))?;
    let schema = prep
        .schema
        .as_ref()
        .ok_or_else(|| anyhow!("checkpoint: no column schema stored"))?;
    manifest.seed = prep.options.seed;

    let data_path = match (&a.data, &prep.source) {
        (Some(p), _) => p.clone(),
        (None, Some(src)) => PathBuf::from(&src.path),
        (None, None) => bail!("no --data given and the checkpoint records no training file"),
    };
    let split = a
        .split
        .unwrap_or(if a.data.is_some() { EvalSplit::All } else { EvalSplit::Test });
    let table = read_table(&data_path, parse_delimiter(&a.delimiter)?).context("load")?;
    let loaded = schema.apply(&table).context("encode")?;
    let full = loaded.dataset;
    let rows = match split {
        EvalSplit::All => full.clone(),
        EvalSplit::Test | EvalSplit::Train => {
            if let Some(src) = &prep.source {
                if src.fingerprint != full.fingerprint() {
                    bail!(
                        "split: {} differs from the training data, so its held-out rows are unknown",
                        data_path.display()
                    );
                }
            }
            let p = prepare(&full, None, &prep.options).context("split")?;
            if split == EvalSplit::Test {
                p.test
            } else {
                p.train
            }
        }
    };
    let samples = Samples::from_dataset(&rows, &prep.standardizer).context("standardize")?;
    let ev = evaluate(&model, &samples, a.batch_size).context("predict")?;
    let names = schema.labels.class_names().to_vec();
    let cm = confusion(&samples.y, &ev.predictions, ev.classes)?.with_names(&names);
    let report = class_report(&cm);
    let curves = roc_auc(&ev.probs, ev.classes, &samples.y)?;

    let one = samples.x.select_rows(&[0]);
    let idx: Vec<usize> = (0..64).map(|i| i % samples.len()).collect();
    let many = samples.x.select_rows(&idx);
    let latency = Latency {
        batch_1_seconds_per_instance: measure_inference(&model, &one, a.timing_reps).context("timing")?,
        batch_64_seconds_per_instance: measure_inference(&model, &many, a.timing_reps).context("timing")?,
        repetitions: a.timing_reps,
    };

    let out = EvalReport {
        checkpoint: a.checkpoint.display().to_string(),
        checkpoint_sha256: ck.hash()?,
        data: data_path.display().to_string(),
        split,
        samples: samples.len(),
        loss: ev.loss as f64,
        auc: curves
            .iter()
            .map(|c| ClassAuc {
                class: names[c.class].clone(),
                auc: c.auc,
            })
            .collect(),
        confusion: cm.counts.clone(),
        report,
        latency,
    };
    write_json(&a.out_dir.join(REPORT_JSON), &out)?;
    std::fs::write(a.out_dir.join(REPORT_TXT), out.to_text()).context("writing report text")?;
    cm.write_csv(a.out_dir.join(CONFUSION_CSV))?;
    write_roc_csv(&curves, &names, a.out_dir.join(ROC_CSV))?;

    manifest.config = json!({ "split": split, "batch_size": a.batch_size, "timing_reps": a.timing_reps });
    manifest.dataset = Some(rows.fingerprint());
    manifest.artifacts = [REPORT_JSON, REPORT_TXT, CONFUSION_CSV, ROC_CSV].map(String::from).to_vec();
    manifest.details = json!({
        "checkpoint": out.checkpoint,
        "checkpoint_sha256": out.checkpoint_sha256,
        "data": out.data,
        "dropped_rows": loaded.dropped,
        "accuracy": out.report.accuracy,
    });
    manifest.finish(&a.out_dir)?;
    log::info!("accuracy {:.4} on {} rows", out.report.accuracy, out.samples);
    Ok(out)
}

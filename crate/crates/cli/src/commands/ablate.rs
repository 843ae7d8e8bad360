use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use idsnet_core::data::{prepare, Prepared};
use idsnet_core::metrics::{class_report, confusion, ClassReport};
use idsnet_core::model::{ablation_grid, AblationCase, Model};
use idsnet_core::train::{evaluate, measure_inference, train, EpochRecord, Samples};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::train::model_for;
use super::{write_json, DataArgs, SettingsArgs};
use crate::manifest::RunManifest;
use crate::settings::Settings;

pub const ABLATION_CSV: &str = "ablation.csv";
pub const ABLATION_JSON: &str = "ablation.json";
pub const ABLATION_CSV_HEADER: &str = "case,model,heads,dropout,accuracy,loss,fpr,inf_time,status";

#[derive(Args, Clone, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[command(flatten)]
    pub settings: SettingsArgs,
    /// Comma-separated subset of case ids; all ten by default.
    #[arg(long)]
    pub cases: Option<String>,
    /// Timed passes for the per-case latency column.
    #[arg(long, default_value_t = 10)]
    pub timing_reps: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// One result row; metric fields are absent when the case failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub case_id: u32,
    pub description: String,
    pub heads: Option<usize>,
    pub dropout: f64,
    pub accuracy: Option<f64>,
    pub loss: Option<f64>,
    /// Macro one-vs-rest false-positive rate.
    pub fpr: Option<f64>,
    /// Seconds per instance at batch size 64.
    pub inf_time: Option<f64>,
    pub report: Option<ClassReport>,
    pub epochs: Vec<EpochRecord>,
    pub error: Option<String>,
}

pub struct AblationOutcome {
    pub rows: Vec<AblationRow>,
    pub manifest: RunManifest,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

impl AblationRow {
    fn csv_line(&self) -> String {
        let status = match &self.error {
            None => "ok".to_string(),
            Some(e) => format!("\"error: {}\"", e.replace('"', "'")),
        };
        format!(
            "{},\"{}\",{},{},{},{},{},{},{}",
            self.case_id,
            self.description,
            self.heads.map_or("-".to_string(), |h| h.to_string()),
            self.dropout,
            opt(self.accuracy),
            opt(self.loss),
            opt(self.fpr),
            opt(self.inf_time),
            status
        )
    }
}

fn run_case(case: &AblationCase, prepared: &Prepared, settings: &Settings, reps: usize) -> Result<AblationRow> {
    let scaler = &prepared.preprocessing.standardizer;
    let train_set = Samples::from_dataset(&prepared.train, scaler)?;
    let val_set = Samples::from_dataset(&prepared.validation, scaler)?;
    let test_set = Samples::from_dataset(&prepared.test, scaler)?;
    let mut model = Model::build(&case.config, settings.train.seed)?;
    let epochs = train(&mut model, &train_set, &val_set, &settings.train, |_| {})?;
    let ev = evaluate(&model, &test_set, settings.train.batch_size)?;
    let names = prepared.test.encoder.class_names().to_vec();
    let report = class_report(&confusion(&test_set.y, &ev.predictions, ev.classes)?.with_names(&names));
    let idx: Vec<usize> = (0..64).map(|i| i % test_set.len()).collect();
    let inf_time = measure_inference(&model, &test_set.x.select_rows(&idx), reps)?;
    Ok(AblationRow {
        case_id: case.case_id,
        description: case.description.to_string(),
        heads: case.config.use_mha.then_some(case.config.num_heads),
        dropout: case.config.dropout_rate as f64,
        accuracy: Some(report.accuracy),
        loss: Some(ev.loss as f64),
        fpr: Some(report.fpr.macro_avg),
        inf_time: Some(inf_time),
        report: Some(report),
        epochs,
        error: None,
    })
}

/// Trains and scores every grid case on one shared split. A failing case
/// is recorded and the others still run.
pub fn ablate(a: &AblateArgs) -> Result<AblationOutcome> {
    let settings = a.settings.resolve().context("config")?;
    let mut manifest = RunManifest::start("ablate", settings.train.seed);
    super::ensure_dir(&a.out_dir)?;
    let loaded = a.input.load()?;
    let data = &loaded.dataset;
    let base = model_for(&settings, data.n_features(), data.n_classes());

    let mut grid = ablation_grid(&base);
    if let Some(list) = &a.cases {
        let wanted: Vec<u32> = list
            .split(',')
            .map(|s| s.trim().parse().with_context(|| format!("bad case id '{s}'")))
            .collect::<Result<_>>()?;
        if let Some(bad) = wanted.iter().find(|w| !grid.iter().any(|c| c.case_id == **w)) {
            bail!("unknown ablation case {bad}");
        }
        grid.retain(|c| wanted.contains(&c.case_id));
    }

    // The same seed gives the same split, validation rows and test rows with
    // or without oversampling; only the training rows differ.
    let mut shared: [Option<Prepared>; 2] = [None, None];
    let mut rows = Vec::with_capacity(grid.len());
    for case in &grid {
        log::info!("case {}: {}", case.case_id, case.config.label());
        let mut opts = settings.pipeline.clone();
        opts.use_smote = case.config.use_smote;
        let slot = &mut shared[usize::from(opts.use_smote)];
        let result = match slot {
            Some(p) => Ok(&*p),
            None => prepare(data, Some(loaded.schema.clone()), &opts).map(|p| &*slot.insert(p)),
        }
        .map_err(anyhow::Error::from)
        .and_then(|p| run_case(case, p, &settings, a.timing_reps));
        rows.push(result.unwrap_or_else(|e| {
            log::warn!("case {} failed: {e:#}", case.case_id);
            AblationRow {
                case_id: case.case_id,
                description: case.description.to_string(),
                heads: case.config.use_mha.then_some(case.config.num_heads),
                dropout: case.config.dropout_rate as f64,
                accuracy: None,
                loss: None,
                fpr: None,
                inf_time: None,
                report: None,
                epochs: Vec::new(),
                error: Some(format!("{e:#}")),
            }
        }));
    }

    let csv_path = a.out_dir.join(ABLATION_CSV);
    let mut w = std::fs::File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    writeln!(w, "{ABLATION_CSV_HEADER}")?;
    for r in &rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    write_json(&a.out_dir.join(ABLATION_JSON), &rows)?;

    manifest.config = serde_json::to_value(&settings)?;
    manifest.dataset = Some(data.fingerprint());
    manifest.artifacts = vec![ABLATION_CSV.into(), ABLATION_JSON.into()];
    manifest.details = json!({
        "data": a.input.data.display().to_string(),
        "cases": rows.iter().map(|r| r.case_id).collect::<Vec<_>>(),
        "failed": rows.iter().filter(|r| r.error.is_some()).map(|r| r.case_id).collect::<Vec<_>>(),
    });
    let manifest = manifest.finish(&a.out_dir)?;
    Ok(AblationOutcome { rows, manifest })
}

//! Delimited-text ingestion and export.
//!
//! Column typing (the numeric policy) decides per feature column whether it
//! is numeric or categorical:
//!
//! * [`NumericPolicy::Auto`]: a column is numeric when more than half of its
//!   cells parse as finite numbers; otherwise its values are label-encoded
//!   in lexicographic order.
//! * [`NumericPolicy::Strict`]: every feature column is numeric.
//!
//! A row is dropped when one of its numeric cells does not parse (e.g. `?`)
//! or, when applying a stored schema, when a categorical value or label was
//! never seen at fit time. The drop count is reported, never silent.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, LabelEncoder};
use crate::error::{Error, Result};
use crate::tensor::Real;

/// A rectangular table of string cells with a header.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericPolicy {
    #[default]
    Auto,
    Strict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical { encoder: LabelEncoder },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// How raw columns map onto model features; stored with checkpoints so
/// evaluation data is encoded exactly like the training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub label_column: String,
    pub labels: LabelEncoder,
    pub features: Vec<FeatureColumn>,
}

/// Result of turning a table into a dataset.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub dataset: Dataset,
    pub schema: TableSchema,
    /// Rows discarded because a cell could not be encoded.
    pub dropped: usize,
}

pub fn read_table(path: impl AsRef<Path>, delimiter: u8) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_table(file, delimiter).map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_table(reader: impl std::io::Read, delimiter: u8) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Input(format!("unreadable header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(Error::Input("empty file".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Input(format!("row {}: {e}", i + 1)))?;
        rows.push(rec.iter().map(|c| c.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::Input("file has a header but no data rows".into()));
    }
    Ok(RawTable { columns, rows })
}

fn parse_number(cell: &str) -> Option<Real> {
    cell.parse::<Real>().ok().filter(|v| v.is_finite())
}

fn label_index(table: &RawTable, label_column: &str) -> Result<usize> {
    table
        .columns
        .iter()
        .position(|c| c == label_column)
        .ok_or_else(|| Error::Config(format!("label column '{label_column}' not found in header")))
}

impl TableSchema {
    /// Infers column kinds and encoders from `table`.
    pub fn infer(table: &RawTable, label_column: &str, policy: NumericPolicy) -> Result<TableSchema> {
        let li = label_index(table, label_column)?;
        let mut features = Vec::new();
        for (ci, name) in table.columns.iter().enumerate() {
            if ci == li {
                continue;
            }
            let numeric = match policy {
                NumericPolicy::Strict => true,
                NumericPolicy::Auto => {
                    let parsed = table.rows.iter().filter(|r| parse_number(&r[ci]).is_some()).count();
                    2 * parsed > table.rows.len()
                }
            };
            let kind = if numeric {
                ColumnKind::Numeric
            } else {
                ColumnKind::Categorical {
                    encoder: LabelEncoder::fit(table.rows.iter().map(|r| r[ci].as_str())),
                }
            };
            features.push(FeatureColumn {
                name: name.clone(),
                kind,
            });
        }
        if features.is_empty() {
            return Err(Error::Input("table has no feature columns".into()));
        }
        // classes come from rows that survive numeric parsing
        let probe = TableSchema {
            label_column: label_column.to_string(),
            labels: LabelEncoder::default(),
            features,
        };
        let cols = probe.column_indices(table)?;
        let kept = table.rows.iter().filter(|r| probe.encode_row(r, &cols).is_some());
        let labels = LabelEncoder::fit(kept.map(|r| r[li].as_str()));
        Ok(TableSchema { labels, ..probe })
    }

    fn column_indices(&self, table: &RawTable) -> Result<Vec<usize>> {
        self.features
            .iter()
            .map(|f| {
                table
                    .columns
                    .iter()
                    .position(|c| *c == f.name)
                    .ok_or_else(|| Error::Config(format!("feature column '{}' missing", f.name)))
            })
            .collect()
    }

    fn encode_row(&self, row: &[String], cols: &[usize]) -> Option<Vec<Real>> {
        self.features
            .iter()
            .zip(cols)
            .map(|(f, &ci)| match &f.kind {
                ColumnKind::Numeric => parse_number(&row[ci]),
                ColumnKind::Categorical { encoder } => encoder.encode(&row[ci]).map(|i| i as Real),
            })
            .collect()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Encodes `table` under this schema. Rows whose cells or label cannot
    /// be encoded are dropped and counted.
    pub fn apply(&self, table: &RawTable) -> Result<Loaded> {
        let actual = table.columns.len().saturating_sub(1);
        if actual != self.n_features() {
            return Err(Error::Config(format!(
                "feature width mismatch: expected {} features, data has {actual}",
                self.n_features()
            )));
        }
        let li = label_index(table, &self.label_column)?;
        let cols = self.column_indices(table)?;
        let mut features = Vec::with_capacity(table.rows.len() * self.n_features());
        let mut labels = Vec::with_capacity(table.rows.len());
        let mut dropped = 0;
        for row in &table.rows {
            match (self.encode_row(row, &cols), self.labels.encode(&row[li])) {
                (Some(values), Some(y)) => {
                    features.extend(values);
                    labels.push(y);
                }
                _ => dropped += 1,
            }
        }
        if labels.is_empty() {
            return Err(Error::Input(format!("all {dropped} rows were dropped during encoding")));
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} rows with unparseable or unknown cells");
        }
        let names = self.features.iter().map(|f| f.name.clone()).collect();
        let dataset = Dataset::new(features, self.n_features(), labels, self.labels.clone(), names)?;
        Ok(Loaded {
            dataset,
            schema: self.clone(),
            dropped,
        })
    }
}

/// Reads a delimited file and encodes it, inferring the schema.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    policy: NumericPolicy,
    delimiter: u8,
) -> Result<Loaded> {
    let table = read_table(path, delimiter)?;
    let schema = TableSchema::infer(&table, label_column, policy)?;
    schema.apply(&table)
}

/// Writes `d` as delimited text: feature columns then a `label` column
/// holding class names. Values use the shortest round-trip float format.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let sep = (delimiter as char).to_string();
    let io = |e| Error::io(path, e);
    let mut header = d.feature_names.join(&sep);
    header.push_str(&sep);
    header.push_str("label");
    writeln!(w, "{header}").map_err(io)?;
    for i in 0..d.len() {
        let mut line = d.row(i).iter().map(|v| v.to_string()).collect::<Vec<_>>().join(&sep);
        line.push_str(&sep);
        line.push_str(d.encoder.decode(d.labels()[i]).unwrap_or_default());
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

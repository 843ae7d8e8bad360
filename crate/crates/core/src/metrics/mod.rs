//! Multiclass evaluation: confusion matrix, per-class rates, ROC/AUC.

mod confusion;
mod report;
mod roc;

pub use confusion::{confusion, BinaryCounts, ConfusionMatrix};
pub use report::{class_report, fpr, Averages, ClassMetrics, ClassReport, FprSummary};
pub use roc::{roc_auc, write_roc_csv, RocCurve};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ConfusionMatrix;

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn f1_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
    pub support: u64,
    /// Some rate was 0/0 and reported as 0.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FprSummary {
    pub per_class: Vec<f64>,
    /// Uniform mean of the per-class rates.
    pub macro_avg: f64,
    /// Pooled ΣFP / Σ(FP + TN).
    pub micro_avg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_avg: Averages,
    /// Support-weighted; the convention most published tables use.
    pub weighted_avg: Averages,
    pub fpr: FprSummary,
    pub total: u64,
}

pub fn fpr(cm: &ConfusionMatrix) -> FprSummary {
    let k = cm.k();
    let per_class: Vec<f64> = (0..k)
        .map(|c| {
            let b = cm.binary(c);
            ratio(b.fp, b.fp + b.tn).0
        })
        .collect();
    let (fp, neg) = (0..k).map(|c| cm.binary(c)).fold((0, 0), |(fp, neg), b| (fp + b.fp, neg + b.fp + b.tn));
    FprSummary {
        macro_avg: per_class.iter().sum::<f64>() / k.max(1) as f64,
        micro_avg: ratio(fp, neg).0,
        per_class,
    }
}

pub fn class_report(cm: &ConfusionMatrix) -> ClassReport {
    let k = cm.k();
    let total = cm.total();
    let rates = fpr(cm);
    let classes: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let b = cm.binary(c);
            let (precision, dp) = ratio(b.tp, b.tp + b.fp);
            let (recall, dr) = ratio(b.tp, b.tp + b.fn_);
            let (_, df) = ratio(b.fp, b.fp + b.tn);
            ClassMetrics {
                name: cm.class_names[c].clone(),
                precision,
                recall,
                f1: f1_score(precision, recall),
                fpr: rates.per_class[c],
                support: b.tp + b.fn_,
                degenerate: dp || dr || df,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| classes.iter().map(f).sum::<f64>() / k.max(1) as f64;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        if total == 0 {
            0.0
        } else {
            classes.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
        }
    };
    ClassReport {
        accuracy: ratio(cm.trace(), total).0,
        macro_avg: Averages {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        },
        weighted_avg: Averages {
            precision: weighted(|m| m.precision),
            recall: weighted(|m| m.recall),
            f1: weighted(|m| m.f1),
        },
        fpr: rates,
        total,
        classes,
    }
}

impl ClassReport {
    /// Aligned text table: one row per class, then the aggregates.
    pub fn to_table(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.name.len())
            .chain(["weighted avg".len()])
            .max()
            .unwrap_or(12);
        let pct = |v: f64| format!("{:.2}%", 100.0 * v);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>8}",
            "class", "precision", "recall", "f1-score", "fpr", "support"
        );
        for c in &self.classes {
            let flag = if c.degenerate { " *" } else { "" };
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>8}{flag}",
                c.name,
                pct(c.precision),
                pct(c.recall),
                pct(c.f1),
                pct(c.fpr),
                c.support
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>8}",
            "accuracy",
            "",
            "",
            pct(self.accuracy),
            "",
            self.total
        );
        for (label, avg, f) in [
            ("macro avg", self.macro_avg, pct(self.fpr.macro_avg)),
            ("weighted avg", self.weighted_avg, String::new()),
        ] {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>8}",
                label,
                pct(avg.precision),
                pct(avg.recall),
                pct(avg.f1),
                f,
                self.total
            );
        }
        let _ = writeln!(out, "{:<width$}  {:>42}", "micro fpr", pct(self.fpr.micro_avg));
        if self.classes.iter().any(|c| c.degenerate) {
            let _ = writeln!(out, "\n* some rate was 0/0 and is reported as 0");
        }
        out
    }
}

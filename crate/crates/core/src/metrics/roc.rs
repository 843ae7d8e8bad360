use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Real;

/// One-vs-rest ROC for a single class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub class: usize,
    /// `(fpr, tpr)`, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Score threshold of each point (`score ≥ threshold` counts as
    /// positive); the first point uses +∞.
    pub thresholds: Vec<f64>,
    /// `None` when the class has no positives or no negatives.
    pub auc: Option<f64>,
}

impl RocCurve {
    pub fn is_defined(&self) -> bool {
        self.auc.is_some()
    }
}

/// ROC curves from `[N × K]` row-major scores. Equal scores form a single
/// step, so ties contribute half credit to the area.
pub fn roc_auc(scores: &[Real], k: usize, truth: &[usize]) -> Result<Vec<RocCurve>> {
    if k == 0 || scores.len() != truth.len() * k {
        return Err(Error::Contract(format!(
            "{} scores do not form {} rows of {k} classes",
            scores.len(),
            truth.len()
        )));
    }
    if let Some(&bad) = truth.iter().find(|&&y| y >= k) {
        return Err(Error::Contract(format!("label {bad} outside {k} classes")));
    }
    Ok((0..k).map(|c| curve(scores, k, truth, c)).collect())
}

fn curve(scores: &[Real], k: usize, truth: &[usize], c: usize) -> RocCurve {
    let mut items: Vec<(f64, bool)> = truth
        .iter()
        .enumerate()
        .map(|(i, &y)| (scores[i * k + c] as f64, y == c))
        .collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let pos = items.iter().filter(|x| x.1).count();
    let neg = items.len() - pos;
    if pos == 0 || neg == 0 {
        return RocCurve {
            class: c,
            points: Vec::new(),
            thresholds: Vec::new(),
            auc: None,
        };
    }
    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < items.len() {
        let s = items[i].0;
        while i < items.len() && items[i].0 == s {
            if items[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(s);
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    RocCurve {
        class: c,
        points,
        thresholds,
        auc: Some(auc),
    }
}

/// `class,threshold,fpr,tpr` rows for every defined curve.
pub fn write_roc_csv(curves: &[RocCurve], class_names: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "class,threshold,fpr,tpr").map_err(io)?;
    for c in curves {
        let name = class_names.get(c.class).map(String::as_str).unwrap_or("?");
        for ((f, t), th) in c.points.iter().zip(&c.thresholds) {
            writeln!(w, "{name},{th},{f},{t}").map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_scores(pos: &[f64]) -> Vec<Real> {
        pos.iter().flat_map(|&p| [(1.0 - p) as Real, p as Real]).collect()
    }

    #[test]
    fn perfect_separation_is_one() {
        let s = binary_scores(&[0.9, 0.8, 0.2, 0.1]);
        let curves = roc_auc(&s, 2, &[1, 1, 0, 0]).unwrap();
        assert_eq!(curves[1].auc, Some(1.0));
        assert_eq!(curves[0].auc, Some(1.0));
        assert_eq!(curves[1].points.first(), Some(&(0.0, 0.0)));
        assert_eq!(curves[1].points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn all_tied_is_one_half() {
        let s = binary_scores(&[0.5; 6]);
        let curves = roc_auc(&s, 2, &[1, 0, 1, 0, 0, 1]).unwrap();
        assert_eq!(curves[1].auc, Some(0.5));
        assert_eq!(curves[1].points.len(), 2);
    }

    #[test]
    fn absent_class_is_undefined() {
        let s: Vec<Real> = vec![0.5, 0.3, 0.2, 0.1, 0.6, 0.3];
        let curves = roc_auc(&s, 3, &[0, 1]).unwrap();
        assert!(!curves[2].is_defined());
        assert!(curves[0].is_defined());
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        assert!(roc_auc(&[0.1, 0.9, 0.5], 2, &[0, 1]).is_err());
    }
}

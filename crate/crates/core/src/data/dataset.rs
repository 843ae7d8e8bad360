use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Real;

/// Maps class names to contiguous indices in lexicographic order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEncoder {
    class_names: Vec<String>,
}

impl LabelEncoder {
    /// Distinct values of `names`, sorted lexicographically.
    pub fn fit<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let mut class_names: Vec<String> = names.into_iter().map(str::to_string).collect();
        class_names.sort();
        class_names.dedup();
        LabelEncoder { class_names }
    }

    pub fn from_sorted(class_names: Vec<String>) -> Result<Self> {
        if class_names.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("class names must be distinct and sorted".into()));
        }
        Ok(LabelEncoder { class_names })
    }

    pub fn encode(&self, name: &str) -> Option<usize> {
        self.class_names.binary_search_by(|c| c.as_str().cmp(name)).ok()
    }

    pub fn decode(&self, index: usize) -> Option<&str> {
        self.class_names.get(index).map(String::as_str)
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_names.is_empty()
    }
}

/// Feature matrix with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// `N × F`, row-major.
    features: Vec<Real>,
    n_features: usize,
    labels: Vec<usize>,
    pub encoder: LabelEncoder,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<Real>,
        n_features: usize,
        labels: Vec<usize>,
        encoder: LabelEncoder,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if n_features == 0 || features.len() != labels.len() * n_features {
            return Err(Error::Input(format!(
                "{} values do not form {} rows of {n_features} features",
                features.len(),
                labels.len()
            )));
        }
        if feature_names.len() != n_features {
            return Err(Error::Input(format!(
                "{} feature names for {n_features} features",
                feature_names.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= encoder.len()) {
            return Err(Error::Input(format!(
                "label {bad} outside the {} encoded classes",
                encoder.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite feature value".into()));
        }
        Ok(Dataset {
            features,
            n_features,
            labels,
            encoder,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.encoder.len()
    }

    pub fn features(&self) -> &[Real] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[Real] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Sample count per class index (length = number of encoded classes).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Row indices grouped by class.
    pub fn indices_by_class(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &y) in self.labels.iter().enumerate() {
            map.entry(y).or_default().push(i);
        }
        map
    }

    /// Copies the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        Dataset {
            features,
            n_features: self.n_features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            encoder: self.encoder.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Appends rows with the same width and encoder.
    pub fn extend(&mut self, features: &[Real], labels: &[usize]) {
        debug_assert_eq!(features.len(), labels.len() * self.n_features);
        self.features.extend_from_slice(features);
        self.labels.extend_from_slice(labels);
    }
}

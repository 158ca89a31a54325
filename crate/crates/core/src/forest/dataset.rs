use crate::error::{Error, Result};
use crate::label::Label;

/// Row-major training matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    feature_dim: usize,
    features: Vec<f64>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(feature_dim: usize) -> Self {
        LabeledDataset {
            feature_dim,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: &[Label]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut ds = LabeledDataset::new(dim);
        for (row, &label) in rows.iter().zip(labels) {
            ds.push(row.as_ref(), label)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, row: &[f64], label: Label) -> Result<()> {
        if row.len() != self.feature_dim {
            return Err(Error::invalid(format!(
                "sample has {} features, dataset has {}",
                row.len(),
                self.feature_dim
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample contains a non-finite feature"));
        }
        self.features.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    #[inline]
    pub fn value(&self, sample: usize, feature: usize) -> f64 {
        self.features[sample * self.feature_dim + feature]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.features[sample * self.feature_dim..(sample + 1) * self.feature_dim]
    }

    pub fn label(&self, sample: usize) -> Label {
        self.labels[sample]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Copy with every label mapped through `f`.
    pub fn relabeled(&self, f: impl Fn(Label) -> Label) -> Self {
        LabeledDataset {
            feature_dim: self.feature_dim,
            features: self.features.clone(),
            labels: self.labels.iter().map(|&l| f(l)).collect(),
        }
    }
}

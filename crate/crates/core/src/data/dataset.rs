use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labelled samples: one feature row per label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::Data("a dataset needs at least 2 classes".into()));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::Data(format!("label {y} at row {i} out of range for {num_classes} classes")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        Ok(LabeledDataset {
            features,
            labels,
            num_classes,
        })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    pub(crate) fn map_features(&mut self, f: impl FnOnce(&mut Array2<f64>)) {
        f(&mut self.features);
    }
}

/// Covariate-shift transform applied to a client's features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    #[default]
    None,
    AffineRotation,
    MeanOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShiftTag {
    pub kind: ShiftKind,
    pub magnitude: f64,
}

impl std::fmt::Display for ShiftTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ShiftKind::None => f.write_str("none"),
            ShiftKind::AffineRotation => write!(f, "affine_rotation:{}", self.magnitude),
            ShiftKind::MeanOffset => write!(f, "mean_offset:{}", self.magnitude),
        }
    }
}

/// One client's local data, split into disjoint train and test shards.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientPartition {
    pub client_id: usize,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub shift: ShiftTag,
}

/// Unlabelled samples pooled from client contributions.
///
/// Carries provenance only: which client contributed each row and at which
/// position of that client's train shard. No label is retained.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicDataset {
    features: Array2<f64>,
    contributor_ids: Vec<usize>,
    source_rows: Vec<usize>,
}

impl PublicDataset {
    pub(crate) fn new(features: Array2<f64>, contributor_ids: Vec<usize>, source_rows: Vec<usize>) -> Self {
        debug_assert_eq!(features.nrows(), contributor_ids.len());
        debug_assert_eq!(features.nrows(), source_rows.len());
        PublicDataset {
            features,
            contributor_ids,
            source_rows,
        }
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn contributor_ids(&self) -> &[usize] {
        &self.contributor_ids
    }

    /// Row index within the contributing client's train shard.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    pub fn len(&self) -> usize {
        self.contributor_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contributor_ids.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Writes the public features as CSV. There is no label column.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.feature_dim()).map(|j| format!("x{j}")).collect();
        header.push("contributor".into());
        w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;
        for (row, &c) in self.features.axis_iter(Axis(0)).zip(&self.contributor_ids) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            rec.push(c.to_string());
            w.write_record(&rec).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The server-selected public samples for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundBatch {
    pub round: usize,
    pub indices: Vec<usize>,
    pub features: Array2<f64>,
}

impl RoundBatch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{check_simplex, SIMPLEX_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Producer {
    Client(usize),
    Ensemble,
}

/// Class probabilities over one round's public batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelMatrix {
    round: usize,
    producer: Producer,
    probabilities: Array2<f64>,
}

impl SoftLabelMatrix {
    /// Wraps `probabilities`, checking every row is on the simplex.
    pub fn new(round: usize, producer: Producer, probabilities: Array2<f64>) -> Result<Self> {
        check_simplex(probabilities.view(), SIMPLEX_TOLERANCE)?;
        Ok(SoftLabelMatrix {
            round,
            producer,
            probabilities,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn producer(&self) -> Producer {
        self.producer
    }

    pub fn probabilities(&self) -> ArrayView2<'_, f64> {
        self.probabilities.view()
    }

    pub fn num_classes(&self) -> usize {
        self.probabilities.ncols()
    }

    pub fn num_samples(&self) -> usize {
        self.probabilities.nrows()
    }

    /// SHA-256 over the little-endian bit patterns of all entries, row-major.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in self.probabilities.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Unweighted element-wise mean of client soft labels.
///
/// Summation runs in ascending client-id order whatever the input order, so
/// the result is bit-reproducible.
pub fn aggregate_soft_labels(matrices: &[SoftLabelMatrix]) -> Result<SoftLabelMatrix> {
    let Some(first) = matrices.first() else {
        return Err(Error::Protocol("no soft labels to aggregate".into()));
    };
    let shape = first.probabilities.dim();
    for m in matrices {
        if m.round != first.round {
            return Err(Error::Protocol(format!(
                "soft labels from round {} mixed with round {}",
                m.round, first.round
            )));
        }
        if m.probabilities.dim() != shape {
            return Err(Error::Protocol(format!(
                "soft-label shape {:?} from {:?} does not match {:?}",
                m.probabilities.dim(),
                m.producer,
                shape
            )));
        }
    }
    let mut ordered: Vec<&SoftLabelMatrix> = matrices.iter().collect();
    ordered.sort_by_key(|m| m.producer);
    let mut sum = Array2::<f64>::zeros(shape);
    for m in &ordered {
        sum += &m.probabilities;
    }
    let n = matrices.len() as f64;
    sum.mapv_inplace(|v| v / n);
    SoftLabelMatrix::new(first.round, Producer::Ensemble, sum)
}

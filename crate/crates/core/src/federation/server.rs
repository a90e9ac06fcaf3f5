use crate::data::{select_round_batch, PublicDataset, RoundBatch};
use crate::error::Result;

use super::soft_labels::{aggregate_soft_labels, SoftLabelMatrix};

/// The FedADAS server.
///
/// It holds the unlabelled public pool and only ever handles public
/// features, round indices and soft-label matrices; its API admits no model
/// parameters and no client labels.
#[derive(Debug)]
pub struct DistillationServer<'a> {
    public: &'a PublicDataset,
    batch_size: usize,
    master_seed: u64,
}

impl<'a> DistillationServer<'a> {
    pub fn new(public: &'a PublicDataset, batch_size: usize, master_seed: u64) -> Self {
        DistillationServer {
            public,
            batch_size,
            master_seed,
        }
    }

    pub fn select_round_batch(&self, round: usize) -> Result<RoundBatch> {
        select_round_batch(self.public, self.batch_size, round, self.master_seed)
    }

    pub fn aggregate(&self, uploads: &[SoftLabelMatrix]) -> Result<SoftLabelMatrix> {
        aggregate_soft_labels(uploads)
    }
}

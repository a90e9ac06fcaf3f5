use ndarray::{Array2, Axis};
use rand::seq::index;

use super::dataset::{ClientPartition, PublicDataset, RoundBatch};
use crate::error::{Error, Result};
use crate::rng;

/// Pools `floor(fraction · |train_i|)` unlabelled rows from every client.
///
/// Rows are drawn without replacement from each client's train shard and
/// copied; clients keep their full local data.
pub fn build_public_dataset(partitions: &[ClientPartition], contribution_fraction: f64, seed: u64) -> Result<PublicDataset> {
    if !(contribution_fraction > 0.0 && contribution_fraction <= 1.0) {
        return Err(Error::field(
            "public_contribution_fraction",
            "public_contribution_fraction must be in (0, 1]",
        ));
    }
    if partitions.is_empty() {
        return Err(Error::config("no client partitions"));
    }
    let dim = partitions[0].train.feature_dim();
    let mut rows = Vec::new();
    let mut contributors = Vec::new();
    let mut sources = Vec::new();
    for p in partitions {
        let n = p.train.len();
        let take = (contribution_fraction * n as f64).floor() as usize;
        if take == 0 {
            return Err(Error::config(format!(
                "client {} contributes no public samples: floor({contribution_fraction} x {n}) = 0",
                p.client_id
            )));
        }
        if p.train.feature_dim() != dim {
            return Err(Error::Shape(format!("client {} has feature dim {}", p.client_id, p.train.feature_dim())));
        }
        let mut rng = rng::stream(seed, "public-contribution", &[p.client_id as u64]);
        for i in index::sample(&mut rng, n, take) {
            rows.push(p.train.features().row(i).to_owned());
            contributors.push(p.client_id);
            sources.push(i);
        }
    }
    let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
    let features = ndarray::stack(Axis(0), &views).map_err(|e| Error::Shape(e.to_string()))?;
    Ok(PublicDataset::new(features, contributors, sources))
}

/// Server-side uniform sample of `batch_size` public rows for `round`.
pub fn select_round_batch(public: &PublicDataset, batch_size: usize, round: usize, master_seed: u64) -> Result<RoundBatch> {
    if batch_size == 0 || batch_size > public.len() {
        return Err(Error::field(
            "public_batch_size",
            format!("public_batch_size must be in [1, {}] (public dataset size)", public.len()),
        ));
    }
    let mut rng = rng::stream(master_seed, "round-batch", &[round as u64]);
    let indices = index::sample(&mut rng, public.len(), batch_size).into_vec();
    let features: Array2<f64> = public.features().select(Axis(0), &indices);
    Ok(RoundBatch {
        round,
        indices,
        features,
    })
}

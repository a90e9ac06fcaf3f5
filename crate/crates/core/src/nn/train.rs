use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use super::model::Model;
use super::optim::{apply_update, OptimizerState, SchedulerState};
use crate::error::Result;
use crate::rng::StreamRng;

/// Runs one pass over `rows` samples in shuffled mini-batches.
///
/// `loss_fn` receives the row indices of a batch and returns the batch mean
/// loss with its gradient. Returns the sample-weighted mean loss of the epoch,
/// measured before each batch's update.
pub fn run_epoch<F>(
    model: &mut Model,
    optimizer: &mut OptimizerState,
    scheduler: &SchedulerState,
    rows: usize,
    batch_size: usize,
    rng: &mut StreamRng,
    mut loss_fn: F,
) -> Result<f64>
where
    F: FnMut(&Model, &[usize]) -> Result<(f64, Vec<f64>)>,
{
    let mut order: Vec<usize> = (0..rows).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for batch in order.chunks(batch_size.max(1)) {
        let (loss, grad) = loss_fn(model, batch)?;
        total += loss * batch.len() as f64;
        apply_update(model, &grad, optimizer, scheduler)?;
    }
    Ok(if rows == 0 { 0.0 } else { total / rows as f64 })
}

pub(crate) fn gather_rows(features: ArrayView2<'_, f64>, rows: &[usize]) -> Array2<f64> {
    features.select(Axis(0), rows)
}

use crate::data::{ClientPartition, RoundBatch};
use crate::error::{Error, Result};
use crate::nn::{
    cross_entropy_loss, gather_rows, kd_loss, run_epoch, softmax, Model, ModelSpec, OptimizerState, SchedulerState,
};
use crate::rng;

use super::protocol::ProtocolConfig;
use super::soft_labels::{Producer, SoftLabelMatrix};

/// Everything a vehicle keeps between rounds.
///
/// Local training and distillation keep separate optimizer moments; both
/// read the learning rate from the shared epoch scheduler, which only local
/// training advances.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub client_id: usize,
    pub model: Model,
    pub optimizer: OptimizerState,
    pub distill_optimizer: OptimizerState,
    pub scheduler: SchedulerState,
    pub partition: ClientPartition,
    shuffle_seed: u64,
}

impl ClientState {
    pub fn new(partition: ClientPartition, spec: ModelSpec, protocol: &ProtocolConfig) -> Result<Self> {
        let id = partition.client_id;
        if spec.input_dim != partition.train.feature_dim() {
            return Err(Error::config(format!(
                "client {id}: model input_dim {} but data has {} features",
                spec.input_dim,
                partition.train.feature_dim()
            )));
        }
        if spec.num_classes != partition.train.num_classes() {
            return Err(Error::config(format!(
                "client {id}: model has {} classes but data has {}",
                spec.num_classes,
                partition.train.num_classes()
            )));
        }
        let model = Model::init(spec, rng::derive_seed(protocol.master_seed, "model-init", &[id as u64]))?;
        let n = model.parameters().len();
        Ok(ClientState {
            client_id: id,
            optimizer: OptimizerState::new(protocol.optimizer, protocol.learning_rate, n),
            distill_optimizer: OptimizerState::new(protocol.optimizer, protocol.learning_rate, n),
            scheduler: protocol.scheduler()?,
            model,
            partition,
            shuffle_seed: rng::derive_seed(protocol.master_seed, "client-shuffle", &[id as u64]),
        })
    }

    /// `epochs` cross-entropy passes over the train shard. Returns the mean
    /// loss of each epoch.
    pub fn local_train(&mut self, epochs: usize, batch_size: usize) -> Result<Vec<f64>> {
        let train = &self.partition.train;
        let mut losses = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            let mut rng = rng::stream(self.shuffle_seed, "local-epoch", &[self.scheduler.epochs_seen as u64]);
            let loss = run_epoch(
                &mut self.model,
                &mut self.optimizer,
                &self.scheduler,
                train.len(),
                batch_size,
                &mut rng,
                |model, rows| {
                    let x = gather_rows(train.features(), rows);
                    let y: Vec<usize> = rows.iter().map(|&i| train.labels()[i]).collect();
                    cross_entropy_loss(model, x.view(), &y)
                },
            )?;
            self.scheduler.advance_epoch();
            losses.push(loss);
        }
        Ok(losses)
    }

    /// Temperature-scaled class probabilities on the round's public batch.
    pub fn produce_soft_labels(&self, batch: &RoundBatch, temperature: f64) -> Result<SoftLabelMatrix> {
        let logits = self
            .model
            .forward(batch.features.view())
            .map_err(|e| Error::Protocol(format!("client {}: {e}", self.client_id)))?;
        SoftLabelMatrix::new(batch.round, Producer::Client(self.client_id), softmax(&logits, temperature)?)
    }

    /// `epochs` passes of distillation toward `ensemble` over the public batch.
    /// Local labels are never touched.
    pub fn distill(
        &mut self,
        batch: &RoundBatch,
        ensemble: &SoftLabelMatrix,
        epochs: usize,
        temperature: f64,
        batch_size: usize,
    ) -> Result<Vec<f64>> {
        if ensemble.round() != batch.round || ensemble.num_samples() != batch.len() {
            return Err(Error::Protocol(format!(
                "ensemble for round {} with {} rows does not match batch of round {} with {} rows",
                ensemble.round(),
                ensemble.num_samples(),
                batch.round,
                batch.len()
            )));
        }
        let targets = ensemble.probabilities();
        let mut losses = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            let mut rng = rng::stream(self.shuffle_seed, "distill-epoch", &[batch.round as u64, epoch as u64]);
            let loss = run_epoch(
                &mut self.model,
                &mut self.distill_optimizer,
                &self.scheduler,
                batch.len(),
                batch_size,
                &mut rng,
                |model, rows| {
                    let x = gather_rows(batch.features.view(), rows);
                    let p = gather_rows(targets, rows);
                    kd_loss(model, x.view(), p.view(), temperature)
                },
            )?;
            losses.push(loss);
        }
        Ok(losses)
    }
}

//! Round loops for FedADAS, FedAvg and the local-only baseline.

use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::data::{ClientPartition, PublicDataset};
use crate::error::{Error, Phase, Result};
use crate::metrics::evaluate_fleet;
use crate::nn::ModelSpec;

use super::client::ClientState;
use super::ledger::{fedadas_client_round_bytes, fedavg_client_round_bytes, CommLedger, Direction, PayloadKind, WIRE_FLOAT_BYTES, WIRE_INDEX_BYTES};
use super::protocol::{Method, ProtocolConfig};
use super::record::{ClientRoundLog, FederationOutcome, FleetAccuracy, RoundRecord};
use super::server::DistillationServer;
use super::soft_labels::SoftLabelMatrix;

/// Runs per-client work inline or on a dedicated pool. Results come back in
/// client order either way.
struct Workers(Option<rayon::ThreadPool>);

impl Workers {
    fn new(parallelism: usize) -> Result<Self> {
        if parallelism <= 1 {
            return Ok(Workers(None));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map(|p| Workers(Some(p)))
            .map_err(|e| Error::config(format!("thread pool: {e}")))
    }

    fn map_mut<T, F>(&self, clients: &mut [ClientState], f: F) -> Vec<Result<T>>
    where
        T: Send,
        F: Fn(&mut ClientState) -> Result<T> + Sync + Send,
    {
        match &self.0 {
            None => clients.iter_mut().map(f).collect(),
            Some(pool) => pool.install(|| clients.par_iter_mut().map(f).collect()),
        }
    }

    fn map<T, F>(&self, clients: &[ClientState], f: F) -> Vec<Result<T>>
    where
        T: Send,
        F: Fn(&ClientState) -> Result<T> + Sync + Send,
    {
        match &self.0 {
            None => clients.iter().map(f).collect(),
            Some(pool) => pool.install(|| clients.par_iter().map(f).collect()),
        }
    }
}

/// First failure in client order, tagged with round/phase/client.
fn collect<T>(results: Vec<Result<T>>, clients: &[ClientState], round: usize, phase: Phase) -> Result<Vec<T>> {
    results
        .into_iter()
        .zip(clients)
        .map(|(r, c)| r.map_err(|e| e.in_phase(round, phase, Some(c.client_id))))
        .collect()
}

pub fn init_clients(config: &ProtocolConfig, partitions: &[ClientPartition], specs: &[ModelSpec]) -> Result<Vec<ClientState>> {
    config.validate()?;
    if partitions.is_empty() {
        return Err(Error::config("no clients"));
    }
    if specs.len() != partitions.len() {
        return Err(Error::config(format!(
            "{} model specs for {} clients",
            specs.len(),
            partitions.len()
        )));
    }
    let classes = specs[0].num_classes;
    if let Some(s) = specs.iter().find(|s| s.num_classes != classes) {
        return Err(Error::config(format!(
            "all clients must share num_classes ({classes} vs {})",
            s.num_classes
        )));
    }
    partitions
        .iter()
        .zip(specs)
        .map(|(p, s)| ClientState::new(p.clone(), s.clone(), config))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_phase(0, Phase::Setup, None))
}

fn fleet_accuracy(config: &ProtocolConfig, clients: &[ClientState]) -> Result<Option<FleetAccuracy>> {
    if !config.track_accuracy || clients.len() < 2 {
        return Ok(None);
    }
    let report = evaluate_fleet(clients)?;
    Ok(Some(FleetAccuracy {
        mean_personalization: report.mean_personalization,
        mean_generalization: report.mean_generalization,
        mean_bam: report.mean_bam,
    }))
}

pub fn run_fedadas(
    config: &ProtocolConfig,
    partitions: &[ClientPartition],
    public: &PublicDataset,
    specs: &[ModelSpec],
) -> Result<FederationOutcome> {
    run_fedadas_observed(config, partitions, public, specs, |_| Ok(()))
}

/// FedADAS with a callback invoked after every completed round.
pub fn run_fedadas_observed(
    config: &ProtocolConfig,
    partitions: &[ClientPartition],
    public: &PublicDataset,
    specs: &[ModelSpec],
    mut on_round: impl FnMut(&RoundRecord) -> Result<()>,
) -> Result<FederationOutcome> {
    let mut clients = init_clients(config, partitions, specs)?;
    let workers = Workers::new(config.parallelism)?;
    let server = DistillationServer::new(public, config.public_batch_size, config.master_seed);
    let num_classes = specs[0].num_classes;
    let (up_bytes, ens_bytes, idx_bytes) = fedadas_client_round_bytes(config.public_batch_size, num_classes);
    let mut ledger = CommLedger::new();
    let mut rounds = Vec::with_capacity(config.rounds);
    let (e_local, e_distill, tau, bs) = (config.e_local, config.e_distill, config.temperature, config.batch_size);

    for round in 1..=config.rounds {
        let started = Instant::now();
        let batch = server
            .select_round_batch(round)
            .map_err(|e| e.in_phase(round, Phase::RoundBatch, None))?;

        let local = workers.map_mut(&mut clients, |c| c.local_train(e_local, bs));
        let local = collect(local, &clients, round, Phase::LocalTraining)?;

        let uploads = workers.map(&clients, |c| c.produce_soft_labels(&batch, tau));
        let uploads: Vec<SoftLabelMatrix> = collect(uploads, &clients, round, Phase::SoftLabels)?;
        for c in &clients {
            ledger.record(round, c.client_id, Direction::Up, PayloadKind::Logits, up_bytes / WIRE_FLOAT_BYTES, WIRE_FLOAT_BYTES);
        }

        let ensemble = server
            .aggregate(&uploads)
            .map_err(|e| e.in_phase(round, Phase::Aggregation, None))?;
        for c in &clients {
            ledger.record(round, c.client_id, Direction::Down, PayloadKind::Logits, ens_bytes / WIRE_FLOAT_BYTES, WIRE_FLOAT_BYTES);
            ledger.record(round, c.client_id, Direction::Down, PayloadKind::Indices, idx_bytes / WIRE_INDEX_BYTES, WIRE_INDEX_BYTES);
        }

        let kd = workers.map_mut(&mut clients, |c| c.distill(&batch, &ensemble, e_distill, tau, bs));
        let kd = collect(kd, &clients, round, Phase::Distillation)?;

        let n = clients.len() as u64;
        let record = RoundRecord {
            round,
            clients: clients
                .iter()
                .zip(local.into_iter().zip(kd))
                .map(|(c, (local_losses, kd_losses))| ClientRoundLog {
                    client_id: c.client_id,
                    local_losses,
                    kd_losses,
                })
                .collect(),
            ensemble_digest: Some(ensemble.digest()),
            global_model_digest: None,
            bytes_up: n * up_bytes,
            bytes_down: n * (ens_bytes + idx_bytes),
            fleet_accuracy: fleet_accuracy(config, &clients)?,
            wall_clock: started.elapsed(),
        };
        on_round(&record)?;
        rounds.push(record);
    }

    Ok(FederationOutcome {
        method: Method::Fedadas,
        rounds,
        clients,
        ledger,
    })
}

/// Size-weighted parameter mean `Σ (n_i / n) θ_i`, accumulated in the given order.
pub fn fedavg_aggregate(parameters: &[&[f64]], sizes: &[usize]) -> Result<Vec<f64>> {
    if parameters.is_empty() || parameters.len() != sizes.len() {
        return Err(Error::Protocol(format!(
            "{} parameter vectors with {} weights",
            parameters.len(),
            sizes.len()
        )));
    }
    let len = parameters[0].len();
    if parameters.iter().any(|p| p.len() != len) {
        return Err(Error::Protocol("parameter vectors differ in length".into()));
    }
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(Error::Protocol("all clients have empty train shards".into()));
    }
    let total = total as f64;
    let w0 = sizes[0] as f64 / total;
    let mut acc: Vec<f64> = parameters[0].iter().map(|p| w0 * p).collect();
    for (p, &n) in parameters.iter().zip(sizes).skip(1) {
        let w = n as f64 / total;
        for (a, v) in acc.iter_mut().zip(p.iter()) {
            *a += w * v;
        }
    }
    Ok(acc)
}

fn parameter_digest(parameters: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in parameters {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn same_architecture(a: &ModelSpec, b: &ModelSpec) -> bool {
    a.input_dim == b.input_dim
        && a.hidden_layers == b.hidden_layers
        && a.num_classes == b.num_classes
        && a.activation == b.activation
}

pub fn run_fedavg(config: &ProtocolConfig, partitions: &[ClientPartition], specs: &[ModelSpec]) -> Result<FederationOutcome> {
    run_fedavg_observed(config, partitions, specs, |_| Ok(()))
}

pub fn run_fedavg_observed(
    config: &ProtocolConfig,
    partitions: &[ClientPartition],
    specs: &[ModelSpec],
    mut on_round: impl FnMut(&RoundRecord) -> Result<()>,
) -> Result<FederationOutcome> {
    if let Some(first) = specs.first() {
        if specs.iter().any(|s| !same_architecture(s, first)) {
            return Err(Error::config("FedAvg requires homogeneous architectures"));
        }
    }
    let mut clients = init_clients(config, partitions, specs)?;
    let workers = Workers::new(config.parallelism)?;
    let param_count = specs[0].parameter_count();
    let (up_bytes, down_bytes) = fedavg_client_round_bytes(param_count);
    let sizes: Vec<usize> = clients.iter().map(|c| c.partition.train.len()).collect();
    let mut ledger = CommLedger::new();
    let mut rounds = Vec::with_capacity(config.rounds);

    for round in 1..=config.rounds {
        let started = Instant::now();
        let local = workers.map_mut(&mut clients, |c| c.local_train(config.e_local, config.batch_size));
        let local = collect(local, &clients, round, Phase::LocalTraining)?;

        let params: Vec<&[f64]> = clients.iter().map(|c| c.model.parameters()).collect();
        let global = fedavg_aggregate(&params, &sizes).map_err(|e| e.in_phase(round, Phase::Aggregation, None))?;
        for c in clients.iter_mut() {
            ledger.record(round, c.client_id, Direction::Up, PayloadKind::Parameters, param_count as u64, WIRE_FLOAT_BYTES);
            ledger.record(round, c.client_id, Direction::Down, PayloadKind::Parameters, param_count as u64, WIRE_FLOAT_BYTES);
            c.model
                .set_parameters(&global)
                .map_err(|e| e.in_phase(round, Phase::Aggregation, Some(c.client_id)))?;
        }

        let n = clients.len() as u64;
        let record = RoundRecord {
            round,
            clients: clients
                .iter()
                .zip(local)
                .map(|(c, local_losses)| ClientRoundLog {
                    client_id: c.client_id,
                    local_losses,
                    kd_losses: Vec::new(),
                })
                .collect(),
            ensemble_digest: None,
            global_model_digest: Some(parameter_digest(&global)),
            bytes_up: n * up_bytes,
            bytes_down: n * down_bytes,
            fleet_accuracy: fleet_accuracy(config, &clients)?,
            wall_clock: started.elapsed(),
        };
        on_round(&record)?;
        rounds.push(record);
    }

    Ok(FederationOutcome {
        method: Method::Fedavg,
        rounds,
        clients,
        ledger,
    })
}

pub fn run_local_only(config: &ProtocolConfig, partitions: &[ClientPartition], specs: &[ModelSpec]) -> Result<FederationOutcome> {
    run_local_only_observed(config, partitions, specs, |_| Ok(()))
}

pub fn run_local_only_observed(
    config: &ProtocolConfig,
    partitions: &[ClientPartition],
    specs: &[ModelSpec],
    mut on_round: impl FnMut(&RoundRecord) -> Result<()>,
) -> Result<FederationOutcome> {
    let mut clients = init_clients(config, partitions, specs)?;
    let workers = Workers::new(config.parallelism)?;
    let mut rounds = Vec::with_capacity(config.rounds);
    for round in 1..=config.rounds {
        let started = Instant::now();
        let local = workers.map_mut(&mut clients, |c| c.local_train(config.e_local, config.batch_size));
        let local = collect(local, &clients, round, Phase::LocalTraining)?;
        let record = RoundRecord {
            round,
            clients: clients
                .iter()
                .zip(local)
                .map(|(c, local_losses)| ClientRoundLog {
                    client_id: c.client_id,
                    local_losses,
                    kd_losses: Vec::new(),
                })
                .collect(),
            ensemble_digest: None,
            global_model_digest: None,
            bytes_up: 0,
            bytes_down: 0,
            fleet_accuracy: fleet_accuracy(config, &clients)?,
            wall_clock: started.elapsed(),
        };
        on_round(&record)?;
        rounds.push(record);
    }
    Ok(FederationOutcome {
        method: Method::LocalOnly,
        rounds,
        clients,
        ledger: CommLedger::new(),
    })
}

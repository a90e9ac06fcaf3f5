//! Protocol engines: FedADAS soft-label federation, the FedAvg baseline,
//! a no-communication baseline, and communication accounting.
//!
//! A FedADAS round runs the server's index selection, then per client local
//! training and soft-label upload, then the server's ensemble average, then
//! per client distillation toward the ensemble. The server side only sees
//! public features, indices and soft-label matrices.

mod client;
mod engine;
mod ledger;
mod protocol;
mod record;
mod server;
mod soft_labels;

pub use client::ClientState;
pub use engine::{
    fedavg_aggregate, init_clients, run_fedadas, run_fedadas_observed, run_fedavg, run_fedavg_observed, run_local_only,
    run_local_only_observed,
};
pub use ledger::{
    bytes_to_mb, comm_cost, fedadas_client_round_bytes, fedavg_client_round_bytes, CommLedger, CostQuery, Direction,
    LedgerEntry, PayloadKind, Scope, WIRE_FLOAT_BYTES, WIRE_INDEX_BYTES,
};
pub use protocol::{Method, ProtocolConfig};
pub use record::{ClientRoundLog, FederationOutcome, FleetAccuracy, RoundRecord};
pub use server::DistillationServer;
pub use soft_labels::{aggregate_soft_labels, Producer, SoftLabelMatrix};

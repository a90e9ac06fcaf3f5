use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::client::ClientState;
use super::ledger::CommLedger;
use super::protocol::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRoundLog {
    pub client_id: usize,
    /// Mean cross-entropy of each local epoch.
    pub local_losses: Vec<f64>,
    /// Mean distillation loss of each distillation epoch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kd_losses: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetAccuracy {
    pub mean_personalization: f64,
    pub mean_generalization: f64,
    pub mean_bam: f64,
}

/// Outcome of one communication round. Wall-clock time is kept out of the
/// serialized form so records of identical runs compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub clients: Vec<ClientRoundLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_model_digest: Option<String>,
    pub bytes_up: u64,
    pub bytes_down: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fleet_accuracy: Option<FleetAccuracy>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

/// Final state of a federated run.
#[derive(Debug, Clone)]
pub struct FederationOutcome {
    pub method: Method,
    pub rounds: Vec<RoundRecord>,
    pub clients: Vec<ClientState>,
    pub ledger: CommLedger,
}

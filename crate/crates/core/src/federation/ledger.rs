//! Byte-exact communication accounting.
//!
//! Every transfer is recorded as an element count and a declared element
//! width; byte totals are always `count × width`, never measured.

use serde::{Deserialize, Serialize};

/// Width of a soft-label or parameter value on the wire (32-bit float).
pub const WIRE_FLOAT_BYTES: u64 = 4;
/// Width of a public-dataset index on the wire (32-bit unsigned).
pub const WIRE_INDEX_BYTES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Logits,
    Parameters,
    Indices,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub round: usize,
    pub client_id: usize,
    pub direction: Direction,
    pub payload_kind: PayloadKind,
    pub element_count: u64,
    pub element_width: u64,
}

impl LedgerEntry {
    pub fn bytes(&self) -> u64 {
        self.element_count * self.element_width
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommLedger {
    entries: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    Round(usize),
    Client(usize),
    RoundClient { round: usize, client_id: usize },
}

/// Filter for [`comm_cost`]; `None` fields match everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostQuery {
    pub scope: Scope,
    pub direction: Option<Direction>,
    pub payload_kind: Option<PayloadKind>,
}

impl CostQuery {
    pub fn all() -> Self {
        CostQuery {
            scope: Scope::All,
            direction: None,
            payload_kind: None,
        }
    }

    pub fn scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }

    pub fn direction(mut self, direction: Direction) -> Self {
        self.direction = Some(direction);
        self
    }

    pub fn payload(mut self, kind: PayloadKind) -> Self {
        self.payload_kind = Some(kind);
        self
    }

    fn matches(&self, e: &LedgerEntry) -> bool {
        let in_scope = match self.scope {
            Scope::All => true,
            Scope::Round(r) => e.round == r,
            Scope::Client(c) => e.client_id == c,
            Scope::RoundClient { round, client_id } => e.round == round && e.client_id == client_id,
        };
        in_scope
            && self.direction.is_none_or(|d| d == e.direction)
            && self.payload_kind.is_none_or(|k| k == e.payload_kind)
    }
}

impl CommLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &mut self,
        round: usize,
        client_id: usize,
        direction: Direction,
        payload_kind: PayloadKind,
        element_count: u64,
        element_width: u64,
    ) {
        self.entries.push(LedgerEntry {
            round,
            client_id,
            direction,
            payload_kind,
            element_count,
            element_width,
        });
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        comm_cost(self, &CostQuery::all())
    }
}

pub fn comm_cost(ledger: &CommLedger, query: &CostQuery) -> u64 {
    ledger.entries.iter().filter(|e| query.matches(e)).map(LedgerEntry::bytes).sum()
}

pub fn bytes_to_mb(bytes: u64) -> f64 {
    bytes as f64 / 1e6
}

/// Per-client, per-round FedADAS traffic: (logit upload, ensemble download, index download).
pub fn fedadas_client_round_bytes(public_batch_size: usize, num_classes: usize) -> (u64, u64, u64) {
    let logits = (public_batch_size * num_classes) as u64 * WIRE_FLOAT_BYTES;
    (logits, logits, public_batch_size as u64 * WIRE_INDEX_BYTES)
}

/// Per-client, per-round FedAvg traffic: (parameter upload, parameter download).
pub fn fedavg_client_round_bytes(parameter_count: usize) -> (u64, u64) {
    let p = parameter_count as u64 * WIRE_FLOAT_BYTES;
    (p, p)
}

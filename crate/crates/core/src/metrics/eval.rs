//! Personalization, generalization and their geometric mean (BAM).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::federation::ClientState;
use crate::nn::Model;

/// Percentage of rows whose argmax logit equals the label. Ties resolve to
/// the lowest class index.
pub fn accuracy(model: &Model, dataset: &LabeledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Data("accuracy of an empty dataset is undefined".into()));
    }
    let logits = model.forward(dataset.features())?;
    let correct = logits
        .0
        .rows()
        .into_iter()
        .zip(dataset.labels())
        .filter(|(row, &y)| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best == y
        })
        .count();
    Ok(100.0 * correct as f64 / dataset.len() as f64)
}

/// Balanced Accuracy Metric: `sqrt(personalization × generalization)`.
pub fn bam(personalization: f64, generalization: f64) -> f64 {
    (personalization * generalization).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientEval {
    pub client_id: usize,
    pub capacity_tier: String,
    pub personalization: f64,
    pub generalization: f64,
    pub bam: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierSummary {
    pub capacity_tier: String,
    pub clients: usize,
    pub mean_personalization: f64,
    pub mean_generalization: f64,
    pub mean_bam: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub clients: Vec<ClientEval>,
    pub mean_personalization: f64,
    pub mean_generalization: f64,
    pub mean_bam: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Personalization on each client's own test shard, generalization as the
/// mean accuracy over every other client's test shard.
pub fn evaluate_fleet(states: &[ClientState]) -> Result<EvalReport> {
    if states.len() < 2 {
        return Err(Error::config("generalization needs at least 2 clients"));
    }
    let clients = states
        .iter()
        .map(|s| {
            let personalization = accuracy(&s.model, &s.partition.test)?;
            let others = states
                .iter()
                .filter(|o| o.client_id != s.client_id)
                .map(|o| accuracy(&s.model, &o.partition.test))
                .collect::<Result<Vec<_>>>()?;
            let generalization = mean(others.into_iter());
            Ok(ClientEval {
                client_id: s.client_id,
                capacity_tier: s.model.spec().capacity_tier.clone(),
                personalization,
                generalization,
                bam: bam(personalization, generalization),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_clients(clients))
}

impl EvalReport {
    pub fn from_clients(clients: Vec<ClientEval>) -> Self {
        EvalReport {
            mean_personalization: mean(clients.iter().map(|c| c.personalization)),
            mean_generalization: mean(clients.iter().map(|c| c.generalization)),
            mean_bam: mean(clients.iter().map(|c| c.bam)),
            clients,
        }
    }

    /// Fleet means per capacity tier, sorted by tier label.
    pub fn tier_summaries(&self) -> Vec<TierSummary> {
        let mut tiers: BTreeMap<&str, Vec<&ClientEval>> = BTreeMap::new();
        for c in &self.clients {
            tiers.entry(c.capacity_tier.as_str()).or_default().push(c);
        }
        tiers
            .into_iter()
            .map(|(tier, cs)| TierSummary {
                capacity_tier: tier.to_string(),
                clients: cs.len(),
                mean_personalization: mean(cs.iter().map(|c| c.personalization)),
                mean_generalization: mean(cs.iter().map(|c| c.generalization)),
                mean_bam: mean(cs.iter().map(|c| c.bam)),
            })
            .collect()
    }

    /// One row per client plus a trailing `fleet` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("client,capacity_tier,personalization,generalization,bam\n");
        for c in &self.clients {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e}",
                c.client_id, c.capacity_tier, c.personalization, c.generalization, c.bam
            );
        }
        let _ = writeln!(
            out,
            "fleet,,{:.16e},{:.16e},{:.16e}",
            self.mean_personalization, self.mean_generalization, self.mean_bam
        );
        out
    }
}

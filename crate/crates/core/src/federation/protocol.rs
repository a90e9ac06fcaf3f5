use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{OptimizerKind, SchedulerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Fedadas,
    Fedavg,
    LocalOnly,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Fedadas => "fedadas",
            Method::Fedavg => "fedavg",
            Method::LocalOnly => "local_only",
        })
    }
}

/// Round-loop settings shared by all three protocols.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub rounds: usize,
    pub e_local: usize,
    pub e_distill: usize,
    pub temperature: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub scheduler_step_size: usize,
    pub scheduler_gamma: f64,
    pub public_batch_size: usize,
    pub master_seed: u64,
    /// Worker threads for per-client phases; 1 runs everything inline.
    pub parallelism: usize,
    /// Evaluate fleet accuracy after every round (costs N² evaluations).
    pub track_accuracy: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            rounds: 20,
            e_local: 1,
            e_distill: 1,
            temperature: 1.0,
            batch_size: 32,
            learning_rate: 0.001,
            optimizer: OptimizerKind::Adam,
            scheduler_step_size: 10,
            scheduler_gamma: 0.7,
            public_batch_size: 256,
            master_seed: 0,
            parallelism: 1,
            track_accuracy: false,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature <= 0.0 || !self.temperature.is_finite() {
            return Err(Error::field("temperature", "temperature must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::field("batch_size", "batch_size must be > 0"));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::field("learning_rate", "learning_rate must be > 0"));
        }
        if self.public_batch_size == 0 {
            return Err(Error::field("public_batch_size", "public_batch_size must be > 0"));
        }
        self.scheduler()?;
        Ok(())
    }

    pub fn scheduler(&self) -> Result<SchedulerState> {
        SchedulerState::step_decay(self.scheduler_step_size, self.scheduler_gamma)
    }
}

//! Experiment declaration: one TOML file per experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::ShiftKind;
use crate::error::{Error, Result};
use crate::federation::{Method, ProtocolConfig};
use crate::nn::{Activation, ModelSpec, OptimizerKind};

fn default_num_clients() -> usize {
    10
}
fn default_rounds() -> usize {
    20
}
fn default_epochs() -> usize {
    1
}
fn default_temperature() -> f64 {
    1.0
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    0.001
}
fn default_contribution() -> f64 {
    0.1
}
fn default_public_batch_size() -> usize {
    256
}
fn default_alpha() -> f64 {
    0.5
}
fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerConfig {
    pub step_size: usize,
    pub gamma: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            step_size: 10,
            gamma: 0.7,
        }
    }
}

/// Where client data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Gaussian class mixture. Without an explicit `seed` the data is drawn
    /// from the experiment's master seed.
    Synthetic {
        num_classes: usize,
        feature_dim: usize,
        samples_per_class: usize,
        class_separation: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Numeric features followed by an integer label in the last column.
    Csv {
        path: PathBuf,
        #[serde(default)]
        has_header: bool,
    },
}

/// Covariate shift applied to clients `first_client..end_client`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ShiftConfig {
    #[serde(default)]
    pub kind: ShiftKind,
    #[serde(default)]
    pub magnitude: f64,
    #[serde(default)]
    pub first_client: usize,
    #[serde(default)]
    pub end_client: usize,
}

/// A named model architecture. Tiers are dealt to clients round-robin, so
/// listing N tiers gives every client its own spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierConfig {
    pub label: String,
    #[serde(default)]
    pub hidden_layers: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_num_clients")]
    pub num_clients: usize,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_epochs")]
    pub e_local: usize,
    #[serde(default = "default_epochs")]
    pub e_distill: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_contribution")]
    pub public_contribution_fraction: f64,
    #[serde(default = "default_public_batch_size")]
    pub public_batch_size: usize,
    #[serde(default = "default_alpha")]
    pub dirichlet_alpha: f64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// Evaluate the whole fleet after every round.
    #[serde(default)]
    pub track_accuracy: bool,
    #[serde(default)]
    pub scheduler: SchedulerConfig,
    #[serde(default)]
    pub covariate_shift: ShiftConfig,
    pub dataset: DatasetConfig,
    pub models: Vec<TierConfig>,
}

impl ExperimentConfig {
    /// A config with every default filled in and the given data and tiers.
    pub fn new(dataset: DatasetConfig, models: Vec<TierConfig>) -> Self {
        ExperimentConfig {
            method: Method::default(),
            num_clients: default_num_clients(),
            rounds: default_rounds(),
            e_local: default_epochs(),
            e_distill: default_epochs(),
            temperature: default_temperature(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            optimizer: OptimizerKind::default(),
            public_contribution_fraction: default_contribution(),
            public_batch_size: default_public_batch_size(),
            dirichlet_alpha: default_alpha(),
            test_fraction: default_test_fraction(),
            master_seed: 0,
            track_accuracy: false,
            scheduler: SchedulerConfig::default(),
            covariate_shift: ShiftConfig::default(),
            dataset,
            models,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn protocol(&self, parallelism: usize) -> ProtocolConfig {
        ProtocolConfig {
            rounds: self.rounds,
            e_local: self.e_local,
            e_distill: self.e_distill,
            temperature: self.temperature,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            scheduler_step_size: self.scheduler.step_size,
            scheduler_gamma: self.scheduler.gamma,
            public_batch_size: self.public_batch_size,
            master_seed: self.master_seed,
            parallelism,
            track_accuracy: self.track_accuracy,
        }
    }

    /// Model spec of every client, in client order.
    pub fn client_specs(&self, input_dim: usize, num_classes: usize) -> Vec<ModelSpec> {
        (0..self.num_clients)
            .map(|i| {
                let tier = &self.models[i % self.models.len()];
                ModelSpec::new(input_dim, tier.hidden_layers.clone(), num_classes)
                    .with_activation(tier.activation)
                    .with_tier(tier.label.clone())
            })
            .collect()
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<(String, String)> = Vec::new();
        let mut check = |ok: bool, field: &str, constraint: &str| {
            if !ok {
                bad.push((field.to_string(), constraint.to_string()));
            }
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();

        check(self.num_clients >= 2, "num_clients", "num_clients must be >= 2");
        check(positive(self.temperature), "temperature", "temperature must be > 0");
        check(self.batch_size > 0, "batch_size", "batch_size must be > 0");
        check(positive(self.learning_rate), "learning_rate", "learning_rate must be > 0");
        check(
            self.public_contribution_fraction > 0.0 && self.public_contribution_fraction <= 1.0,
            "public_contribution_fraction",
            "public_contribution_fraction must be in (0, 1]",
        );
        check(self.public_batch_size > 0, "public_batch_size", "public_batch_size must be > 0");
        check(positive(self.dirichlet_alpha), "dirichlet_alpha", "dirichlet_alpha must be > 0");
        check(
            self.test_fraction > 0.0 && self.test_fraction < 1.0,
            "test_fraction",
            "test_fraction must be in (0, 1)",
        );
        check(self.scheduler.step_size > 0, "scheduler.step_size", "step_size must be > 0");
        check(
            self.scheduler.gamma > 0.0 && self.scheduler.gamma <= 1.0,
            "scheduler.gamma",
            "gamma must be in (0, 1]",
        );
        check(
            self.master_seed <= i64::MAX as u64,
            "master_seed",
            "master_seed must fit in a signed 64-bit integer",
        );

        let shift = &self.covariate_shift;
        check(
            shift.magnitude >= 0.0 && shift.magnitude.is_finite(),
            "covariate_shift.magnitude",
            "magnitude must be >= 0",
        );
        check(
            shift.first_client <= shift.end_client && shift.end_client <= self.num_clients,
            "covariate_shift.end_client",
            "affected clients must satisfy first_client <= end_client <= num_clients",
        );

        match &self.dataset {
            DatasetConfig::Synthetic {
                num_classes,
                feature_dim,
                samples_per_class,
                class_separation,
                seed,
            } => {
                check(*num_classes >= 2, "dataset.num_classes", "num_classes must be >= 2");
                check(*feature_dim >= 1, "dataset.feature_dim", "feature_dim must be >= 1");
                check(*samples_per_class >= 1, "dataset.samples_per_class", "samples_per_class must be >= 1");
                check(
                    *class_separation >= 0.0 && class_separation.is_finite(),
                    "dataset.class_separation",
                    "class_separation must be >= 0",
                );
                check(
                    seed.is_none_or(|s| s <= i64::MAX as u64),
                    "dataset.seed",
                    "seed must fit in a signed 64-bit integer",
                );
            }
            DatasetConfig::Csv { path, .. } => {
                check(!path.as_os_str().is_empty(), "dataset.path", "path must not be empty");
            }
        }

        if self.models.is_empty() {
            check(false, "models", "at least one model tier is required");
        }
        for (i, tier) in self.models.iter().enumerate() {
            check(!tier.label.is_empty(), &format!("models[{i}].label"), "label must not be empty");
            check(
                tier.hidden_layers.iter().all(|&w| w > 0),
                &format!("models[{i}].hidden_layers"),
                "layer widths must be > 0",
            );
        }
        if self.method == Method::Fedavg {
            let distinct = self
                .models
                .iter()
                .any(|t| t.hidden_layers != self.models[0].hidden_layers || t.activation != self.models[0].activation);
            check(
                !distinct,
                "models",
                "FedAvg requires homogeneous architectures (a single shared model spec)",
            );
        }

        match bad.len() {
            0 => Ok(()),
            1 => {
                let (field, constraint) = bad.pop().unwrap_or_default();
                Err(Error::field(field, constraint))
            }
            _ => Err(Error::config(
                bad.iter()
                    .map(|(f, c)| format!("`{f}`: {c}"))
                    .collect::<Vec<_>>()
                    .join("; "),
            )),
        }
    }
}

/// Reads and validates an experiment file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[dataset]
source = "synthetic"
num_classes = 3
feature_dim = 4
samples_per_class = 50
class_separation = 3.0

[[models]]
label = "small"
"#;

    #[test]
    fn omitted_fields_take_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.temperature, 1.0);
        assert_eq!(c.rounds, 20);
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.scheduler, SchedulerConfig { step_size: 10, gamma: 0.7 });
        assert_eq!(c.public_contribution_fraction, 0.1);
        assert_eq!(c.method, Method::Fedadas);
    }

    #[test]
    fn zero_temperature_is_named() {
        let text = format!("temperature = 0.0\n{MINIMAL}");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("temperature must be > 0"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("temprature = 2.0\n{MINIMAL}");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("temprature"), "{err}");
    }

    #[test]
    fn fedavg_needs_one_spec() {
        let text = format!("method = \"fedavg\"\n{MINIMAL}\n[[models]]\nlabel = \"big\"\nhidden_layers = [16]\n");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("homogeneous"), "{err}");
    }

    #[test]
    fn several_violations_reported_together() {
        let text = format!("temperature = -1.0\nbatch_size = 0\n{MINIMAL}");
        let msg = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(msg.contains("`temperature`") && msg.contains("`batch_size`"), "{msg}");
    }

    #[test]
    fn tiers_assigned_round_robin() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.models.push(TierConfig {
            label: "big".into(),
            hidden_layers: vec![8],
            activation: Activation::Tanh,
        });
        let specs = c.client_specs(4, 3);
        assert_eq!(specs.len(), 10);
        assert_eq!(specs[0].capacity_tier, "small");
        assert_eq!(specs[3].capacity_tier, "big");
        assert_eq!(specs[3].hidden_layers, vec![8]);
    }
}

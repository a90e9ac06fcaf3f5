//! Composite deployment scores for a profiled model.
//!
//! ```text
//! η_inference = FPS × accuracy / model_size      FPS = 1000 / inference_ms
//! η_training  = accuracy / (epoch_minutes × model_size)
//! ```
//!
//! Accuracy is in percent and model size in MB.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub model_label: String,
    pub accuracy: f64,
    pub model_size_mb: f64,
    pub inference_time_ms: f64,
    pub epoch_time_min: f64,
}

impl ProfileRecord {
    pub fn new(label: impl Into<String>, accuracy: f64, model_size_mb: f64, inference_time_ms: f64, epoch_time_min: f64) -> Self {
        ProfileRecord {
            model_label: label.into(),
            accuracy,
            model_size_mb,
            inference_time_ms,
            epoch_time_min,
        }
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("model_size_mb", self.model_size_mb),
            ("inference_time_ms", self.inference_time_ms),
            ("epoch_time_min", self.epoch_time_min),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::field(name, format!("{name} must be > 0 (model {})", self.model_label)));
            }
        }
        Ok(())
    }

    pub fn fps(&self) -> f64 {
        1000.0 / self.inference_time_ms
    }
}

pub fn inference_efficiency(record: &ProfileRecord) -> Result<f64> {
    record.check()?;
    Ok(record.fps() * record.accuracy / record.model_size_mb)
}

pub fn training_efficiency(record: &ProfileRecord) -> Result<f64> {
    record.check()?;
    Ok(record.accuracy / (record.epoch_time_min * record.model_size_mb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneity() {
        let a = ProfileRecord::new("a", 90.0, 2.0, 5.0, 3.0);
        let b = ProfileRecord::new("a", 90.0, 4.0, 5.0, 3.0);
        let ia = inference_efficiency(&a).unwrap();
        let ib = inference_efficiency(&b).unwrap();
        assert!((ia / ib - 2.0).abs() < 1e-12);
        assert!((training_efficiency(&a).unwrap() / training_efficiency(&b).unwrap() - 2.0).abs() < 1e-12);
        let slower = ProfileRecord::new("a", 90.0, 2.0, 6.0, 3.0);
        assert!(inference_efficiency(&slower).unwrap() < ia);
    }

    #[test]
    fn non_positive_inputs_rejected() {
        assert!(inference_efficiency(&ProfileRecord::new("x", 90.0, 1.0, 0.0, 1.0)).is_err());
        assert!(training_efficiency(&ProfileRecord::new("x", 90.0, -1.0, 1.0, 1.0)).is_err());
    }
}

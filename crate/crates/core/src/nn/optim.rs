//! Adam/SGD updates and step learning-rate decay.

use serde::{Deserialize, Serialize};

use super::model::Model;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl OptimizerState {
    pub fn adam(learning_rate: f64, num_parameters: usize) -> Self {
        Self::new(OptimizerKind::Adam, learning_rate, num_parameters)
    }

    pub fn sgd(learning_rate: f64, num_parameters: usize) -> Self {
        Self::new(OptimizerKind::Sgd, learning_rate, num_parameters)
    }

    pub fn new(kind: OptimizerKind, learning_rate: f64, num_parameters: usize) -> Self {
        OptimizerState {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: vec![0.0; num_parameters],
            second_moment: vec![0.0; num_parameters],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    StepDecay,
    None,
}

/// Epoch-based step decay: `lr = base · gamma^floor(epochs_seen / step_size)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerState {
    pub kind: SchedulerKind,
    pub step_size: usize,
    pub gamma: f64,
    pub epochs_seen: usize,
}

impl SchedulerState {
    pub fn step_decay(step_size: usize, gamma: f64) -> Result<Self> {
        if step_size == 0 {
            return Err(Error::field("scheduler.step_size", "step_size must be > 0"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::field("scheduler.gamma", "gamma must be in (0, 1]"));
        }
        Ok(SchedulerState {
            kind: SchedulerKind::StepDecay,
            step_size,
            gamma,
            epochs_seen: 0,
        })
    }

    pub fn constant() -> Self {
        SchedulerState {
            kind: SchedulerKind::None,
            step_size: 1,
            gamma: 1.0,
            epochs_seen: 0,
        }
    }

    pub fn effective_lr(&self, base_lr: f64) -> f64 {
        match self.kind {
            SchedulerKind::None => base_lr,
            SchedulerKind::StepDecay => {
                let decays = (self.epochs_seen / self.step_size) as i32;
                base_lr * self.gamma.powi(decays)
            }
        }
    }

    pub fn advance_epoch(&mut self) {
        self.epochs_seen += 1;
    }
}

/// Applies one optimizer step to `model` using the scheduler's current rate.
pub fn apply_update(
    model: &mut Model,
    gradient: &[f64],
    optimizer: &mut OptimizerState,
    scheduler: &SchedulerState,
) -> Result<()> {
    let n = model.parameters().len();
    if gradient.len() != n || optimizer.first_moment.len() != n {
        return Err(Error::Shape(format!(
            "gradient length {} / optimizer state {} vs {} parameters",
            gradient.len(),
            optimizer.first_moment.len(),
            n
        )));
    }
    if let Some(i) = gradient.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite gradient entry {i} at optimizer step {} (epoch {})",
            optimizer.step_count + 1,
            scheduler.epochs_seen
        )));
    }
    let lr = scheduler.effective_lr(optimizer.learning_rate);
    optimizer.step_count += 1;
    let params = model.parameters_mut();
    match optimizer.kind {
        OptimizerKind::Sgd => {
            for (p, g) in params.iter_mut().zip(gradient) {
                *p -= lr * g;
            }
        }
        OptimizerKind::Adam => {
            let (b1, b2, eps) = (optimizer.beta1, optimizer.beta2, optimizer.epsilon);
            let t = optimizer.step_count as i32;
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            for (((p, &g), m), v) in params
                .iter_mut()
                .zip(gradient)
                .zip(optimizer.first_moment.iter_mut())
                .zip(optimizer.second_moment.iter_mut())
            {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numeric(format!(
            "parameters became non-finite at optimizer step {} (epoch {})",
            optimizer.step_count, scheduler.epochs_seen
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelSpec;

    fn model() -> Model {
        Model::init(ModelSpec::new(3, vec![4], 2), 5).unwrap()
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut m = model();
        let before = m.parameters().to_vec();
        let mut opt = OptimizerState::adam(1e-3, before.len());
        let sched = SchedulerState::step_decay(10, 0.7).unwrap();
        apply_update(&mut m, &vec![0.0; before.len()], &mut opt, &sched).unwrap();
        assert_eq!(m.parameters(), &before[..]);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn sgd_step() {
        let mut m = model();
        let before = m.parameters().to_vec();
        let g: Vec<f64> = (0..before.len()).map(|i| i as f64 * 0.25 - 1.0).collect();
        let mut opt = OptimizerState::sgd(0.1, before.len());
        apply_update(&mut m, &g, &mut opt, &SchedulerState::constant()).unwrap();
        for ((a, b), g) in m.parameters().iter().zip(&before).zip(&g) {
            assert!((a - (b - 0.1 * g)).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // bias-corrected first step is lr * sign(g) up to epsilon
        let mut m = model();
        let before = m.parameters().to_vec();
        let g: Vec<f64> = (0..before.len()).map(|i| if i % 2 == 0 { 3.0 } else { -0.02 }).collect();
        let mut opt = OptimizerState::adam(0.01, before.len());
        apply_update(&mut m, &g, &mut opt, &SchedulerState::constant()).unwrap();
        for ((a, b), g) in m.parameters().iter().zip(&before).zip(&g) {
            assert!((b - a - 0.01 * g.signum()).abs() < 1e-8);
        }
    }

    #[test]
    fn step_decay_schedule() {
        let mut s = SchedulerState::step_decay(10, 0.7).unwrap();
        for _ in 0..10 {
            assert_eq!(s.effective_lr(1e-3), 1e-3);
            s.advance_epoch();
        }
        // the 11th epoch sees the first decay
        assert!((s.effective_lr(1e-3) - 0.7e-3).abs() < 1e-18);
        for _ in 0..10 {
            s.advance_epoch();
        }
        assert!((s.effective_lr(1.0) - 0.49).abs() < 1e-15);
    }

    #[test]
    fn bad_scheduler_rejected() {
        assert!(SchedulerState::step_decay(0, 0.5).is_err());
        assert!(SchedulerState::step_decay(10, 0.0).is_err());
        assert!(SchedulerState::step_decay(10, 1.5).is_err());
    }

    #[test]
    fn non_finite_gradient_reports_context() {
        let mut m = model();
        let n = m.parameters().len();
        let mut g = vec![0.0; n];
        g[3] = f64::NAN;
        let mut opt = OptimizerState::adam(1e-3, n);
        let mut sched = SchedulerState::step_decay(10, 0.7).unwrap();
        sched.epochs_seen = 4;
        let err = apply_update(&mut m, &g, &mut opt, &sched).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert!(err.to_string().contains("epoch 4"));
        assert_eq!(opt.step_count(), 0);
    }
}

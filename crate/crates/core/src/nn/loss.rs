//! Temperature-scaled softmax and the two training losses.
//!
//! The distillation loss is
//!
//! ```text
//! L_KD = τ² · (1/B) Σ_b Σ_c p[b,c] · (ln p[b,c] − log_softmax(z[b]/τ)[c])
//! ```
//!
//! with `p` the ensemble (teacher) distribution and `z` the student logits.
//! Its gradient with respect to the logits is `τ · (softmax(z/τ) − p) / B`.

use ndarray::{Array2, ArrayView2, Axis};

use super::model::{Logits, Model};
use crate::error::{Error, Result};

/// Tolerance on ensemble row sums accepted by [`kd_loss`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(Error::field("temperature", "temperature must be > 0"));
    }
    Ok(())
}

/// Row-wise `log_softmax(logits / temperature)`.
pub fn log_softmax(logits: &Logits, temperature: f64) -> Result<Array2<f64>> {
    check_temperature(temperature)?;
    let mut out = logits.0.mapv(|z| z / temperature);
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln() + max;
        row.mapv_inplace(|v| v - lse);
    }
    Ok(out)
}

/// Row-wise `softmax(logits / temperature)`, computed with max subtraction.
pub fn softmax(logits: &Logits, temperature: f64) -> Result<Array2<f64>> {
    check_temperature(temperature)?;
    let mut out = logits.0.mapv(|z| z / temperature);
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    Ok(out)
}

/// Mean cross-entropy of `labels` under `softmax(logits)`, and its logit gradient.
pub fn cross_entropy_from_logits(logits: &Logits, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (rows, classes) = logits.0.dim();
    if labels.len() != rows {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), rows)));
    }
    if rows == 0 {
        return Err(Error::Data("empty batch".into()));
    }
    if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
        return Err(Error::Data(format!("label {y} at row {i} out of range for {classes} classes")));
    }
    let log_p = log_softmax(logits, 1.0)?;
    let scale = 1.0 / rows as f64;
    let loss = labels.iter().enumerate().map(|(i, &y)| -log_p[[i, y]]).sum::<f64>() * scale;
    let mut grad = log_p.mapv(f64::exp);
    for (i, &y) in labels.iter().enumerate() {
        grad[[i, y]] -= 1.0;
    }
    grad.mapv_inplace(|g| g * scale);
    Ok((loss, grad))
}

/// Validates that every row of `probs` lies on the probability simplex.
pub fn check_simplex(probs: ArrayView2<'_, f64>, tolerance: f64) -> Result<()> {
    for (i, row) in probs.axis_iter(Axis(0)).enumerate() {
        if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::Protocol(format!("row {i} has a negative or non-finite entry")));
        }
        let sum = row.sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(Error::Protocol(format!("row {i} sums to {sum}, not 1")));
        }
    }
    Ok(())
}

/// τ²-scaled mean KL(teacher ∥ student) and its logit gradient.
pub fn kd_from_logits(logits: &Logits, teacher: ArrayView2<'_, f64>, temperature: f64) -> Result<(f64, Array2<f64>)> {
    check_temperature(temperature)?;
    if logits.0.dim() != teacher.dim() {
        return Err(Error::Shape(format!(
            "student logits {:?} vs ensemble {:?}",
            logits.0.dim(),
            teacher.dim()
        )));
    }
    let rows = logits.nrows();
    if rows == 0 {
        return Err(Error::Data("empty batch".into()));
    }
    check_simplex(teacher, SIMPLEX_TOLERANCE)?;
    let log_q = log_softmax(logits, temperature)?;
    let mut kl = 0.0;
    for (p_row, lq_row) in teacher.axis_iter(Axis(0)).zip(log_q.axis_iter(Axis(0))) {
        for (&p, &lq) in p_row.iter().zip(lq_row.iter()) {
            if p > 0.0 {
                kl += p * (p.ln() - lq);
            }
        }
    }
    let t2 = temperature * temperature;
    let loss = t2 * kl / rows as f64;
    let q = softmax(logits, temperature)?;
    let scale = temperature / rows as f64;
    let grad = (&q - &teacher).mapv(|d| d * scale);
    Ok((loss, grad))
}

/// Mean cross-entropy over a labelled batch with its parameter gradient.
pub fn cross_entropy_loss(model: &Model, features: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Vec<f64>)> {
    model.loss_and_gradient(features, |logits| cross_entropy_from_logits(logits, labels))
}

/// Distillation loss toward `ensemble` soft labels with its parameter gradient.
pub fn kd_loss(
    model: &Model,
    features: ArrayView2<'_, f64>,
    ensemble: ArrayView2<'_, f64>,
    temperature: f64,
) -> Result<(f64, Vec<f64>)> {
    model.loss_and_gradient(features, |logits| kd_from_logits(logits, ensemble, temperature))
}

use crate::{Error, Result};

/// Below this total class signal a score is treated as degenerate.
pub const DEGENERATE_THRESHOLD: f64 = 1e-20;

/// Denominator offset used for degenerate classes in training batches.
pub const TRAINING_EPSILON: f64 = 1e-12;

/// How a near-zero `s₊ + s₋` is handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Denominator {
    /// Fail with [`Error::DegenerateSignal`].
    Strict,
    /// Add [`TRAINING_EPSILON`] to the denominator of degenerate classes.
    Regularized,
}

impl Denominator {
    fn offset(self, class: usize, total: f64) -> Result<f64> {
        if total >= DEGENERATE_THRESHOLD {
            return Ok(0.0);
        }
        match self {
            Denominator::Strict => Err(Error::DegenerateSignal { class, total }),
            Denominator::Regularized => Ok(TRAINING_EPSILON),
        }
    }
}

/// `z_c = (s₊ − s₋) / ((s₊ + s₋)·K)` for each class pair.
pub fn differential_scores(pairs: &[(f64, f64)], temperature: f64, mode: Denominator) -> Result<Vec<f64>> {
    pairs
        .iter()
        .enumerate()
        .map(|(c, &(p, n))| {
            let d = p + n + mode.offset(c, p + n)?;
            // dividing the ratio by K keeps |z| ≤ 1/K exact in floating point
            Ok((p - n) / d / temperature)
        })
        .collect()
}

/// Pulls score cotangents back to per-class `(∂L/∂s₊, ∂L/∂s₋)`.
pub fn score_gradient(
    pairs: &[(f64, f64)],
    temperature: f64,
    mode: Denominator,
    score_cotangent: &[f64],
) -> Result<Vec<(f64, f64)>> {
    pairs
        .iter()
        .zip(score_cotangent)
        .enumerate()
        .map(|(c, (&(p, n), &g))| {
            let eps = mode.offset(c, p + n)?;
            let d = p + n + eps;
            let k = g / (temperature * d * d);
            Ok(((2.0 * n + eps) * k, -(2.0 * p + eps) * k))
        })
        .collect()
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Softmax cross-entropy `−ln softmax(z)[label]`.
pub fn d2nn_loss(scores: &[f64], label: usize) -> Result<f64> {
    if label >= scores.len() {
        return Err(Error::invalid(format!(
            "label {label} out of range for {} classes",
            scores.len()
        )));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let loss = lse - scores[label];
    if !loss.is_finite() {
        return Err(Error::NonFinite("softmax cross-entropy".into()));
    }
    Ok(loss.max(0.0))
}

/// `∂loss/∂z = softmax(z) − onehot(label)`.
pub fn loss_gradient(scores: &[f64], label: usize) -> Vec<f64> {
    let mut g = softmax(scores);
    g[label] -= 1.0;
    g
}

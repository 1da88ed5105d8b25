use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Numerically stable softmax of one logit row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&z| math::exp(z - max)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// Gradient of the loss with respect to each logit, `rows × n_classes`.
    pub d_logits: Vec<f64>,
}

/// `Σ w_i · CE(softmax(z_i), y_i) / Σ w_i` and its gradient.
pub fn cross_entropy(logits: &[f64], n_classes: usize, labels: &[usize], weights: &[f64]) -> Result<LossGrad> {
    let rows = labels.len();
    if logits.len() != rows * n_classes || weights.len() != rows {
        return Err(Error::DimMismatch {
            expected: rows * n_classes,
            got: logits.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidConfig("loss weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroWeights);
    }
    let mut loss = 0.0;
    let mut d_logits = alloc::vec![0.0; logits.len()];
    for (i, (&y, &w)) in labels.iter().zip(weights).enumerate() {
        if y >= n_classes {
            return Err(Error::InvalidConfig("label out of range".into()));
        }
        let z = &logits[i * n_classes..(i + 1) * n_classes];
        if w == 0.0 {
            continue;
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|&v| math::exp(v - max)).sum();
        let lse = max + math::ln(sum);
        loss += w * (lse - z[y]);
        let scale = w / total;
        for (c, d) in d_logits[i * n_classes..(i + 1) * n_classes].iter_mut().enumerate() {
            let p = math::exp(z[c] - lse);
            *d = scale * (p - if c == y { 1.0 } else { 0.0 });
        }
    }
    let loss = loss / total;
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross-entropy loss"));
    }
    Ok(LossGrad { loss, d_logits })
}

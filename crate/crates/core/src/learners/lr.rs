//! Per-episode multinomial logistic regression, no meta-learning.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::argmax;
use super::loss::softmax;
use crate::augment::FeatureMatrix;
use crate::error::{Error, Result};
use crate::math;

/// Minimizes `Σ_i CE_i + (λ/2)·‖W‖²` (bias unpenalized) by full-batch
/// gradient descent with step `1/L`, `L` an upper bound on the curvature.
/// Every row, retrieved or not, has unit weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogisticRegression {
    fn default() -> Self {
        Self {
            l2: 1.0,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LrModel {
    pub width: usize,
    pub n_classes: usize,
    /// `n_classes × width`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub iterations: usize,
}

impl LrModel {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| math::dot(&self.weights[c * self.width..(c + 1) * self.width], x) + self.bias[c])
            .collect()
    }

    pub fn predict(&self, query: &FeatureMatrix) -> Result<Vec<usize>> {
        if query.width != self.width {
            return Err(Error::DimMismatch {
                expected: self.width,
                got: query.width,
            });
        }
        Ok((0..query.rows()).map(|i| argmax(&self.logits(query.row(i)))).collect())
    }
}

impl LogisticRegression {
    pub fn fit(&self, support: &FeatureMatrix) -> Result<LrModel> {
        let n = support.n_classes;
        let width = support.width;
        let mut present = alloc::vec![false; n];
        for &y in &support.labels {
            if y >= n {
                return Err(Error::InvalidConfig("label out of range".into()));
            }
            present[y] = true;
        }
        if present.iter().filter(|p| **p).count() < 2 {
            return Err(Error::InvalidConfig("degenerate single-class input".into()));
        }
        let curvature: f64 = (0..support.rows())
            .map(|i| 0.5 * (math::dot(support.row(i), support.row(i)) + 1.0))
            .sum::<f64>()
            + self.l2;
        let step = 1.0 / curvature;

        let mut model = LrModel {
            width,
            n_classes: n,
            weights: alloc::vec![0.0; n * width],
            bias: alloc::vec![0.0; n],
            iterations: 0,
        };
        let mut gw = alloc::vec![0.0; n * width];
        let mut gb = alloc::vec![0.0; n];
        for it in 0..self.max_iter {
            for (g, w) in gw.iter_mut().zip(&model.weights) {
                *g = self.l2 * w;
            }
            gb.iter_mut().for_each(|g| *g = 0.0);
            for i in 0..support.rows() {
                let x = support.row(i);
                let p = softmax(&model.logits(x));
                for c in 0..n {
                    let r = p[c] - if c == support.labels[i] { 1.0 } else { 0.0 };
                    gb[c] += r;
                    for (g, &xv) in gw[c * width..(c + 1) * width].iter_mut().zip(x) {
                        *g += r * xv;
                    }
                }
            }
            let gnorm = math::sqrt(math::dot(&gw, &gw) + math::dot(&gb, &gb));
            if !gnorm.is_finite() {
                return Err(Error::NonFinite("logistic regression gradient"));
            }
            model.iterations = it;
            if gnorm < self.tol {
                break;
            }
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= step * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&gb) {
                *b -= step * g;
            }
            model.iterations = it + 1;
        }
        Ok(model)
    }
}

/// Fits on `support_x` (support plus retrieved rows) and labels `query_x`.
pub fn lr_fit_predict(support_x: &FeatureMatrix, query_x: &FeatureMatrix) -> Result<Vec<usize>> {
    LogisticRegression::default().fit(support_x)?.predict(query_x)
}

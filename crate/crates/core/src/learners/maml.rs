//! First-order MAML over the MLP, with separate inner learning rates for
//! support and retrieved rows.
//!
//! Inner step: `θ ← θ − η_s·g_s − η_r·g_r`, where `g_s` is the gradient of the
//! mean support-row loss and `g_r` that of the (optionally similarity
//! weighted) mean retrieved-row loss. The outer step applies the query-loss
//! gradient at the adapted parameters to the meta-parameters with Adam.
//! When the rates are learned, `∂L_q/∂η ≈ −∇L_q(θ′)·Σ_t g^(t)` treats the
//! inner gradients as constants.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::{mlp_backward, MlpParams};
use super::argmax;
use crate::augment::{FeatureMatrix, Origin};
use crate::error::{Error, Result};

pub const MIN_INNER_LR: f64 = 1e-4;
pub const MAX_INNER_LR: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MamlConfig {
    pub inner_lr_support: f64,
    pub inner_lr_retrieval: f64,
    pub outer_lr: f64,
    pub inner_steps: usize,
    pub hidden: Vec<usize>,
    /// Scale retrieved rows' loss terms by their similarity weight.
    pub weighted_loss: bool,
    /// Meta-learn the two inner learning rates.
    pub learn_inner_lrs: bool,
}

impl Default for MamlConfig {
    /// Desk-scale defaults: 5 inner steps.
    fn default() -> Self {
        Self {
            inner_lr_support: 0.04,
            inner_lr_retrieval: 0.04,
            outer_lr: 0.001,
            inner_steps: 5,
            hidden: alloc::vec![128, 32],
            weighted_loss: false,
            learn_inner_lrs: false,
        }
    }
}

impl MamlConfig {
    /// Full-scale setting with 100 inner steps.
    pub fn full_scale() -> Self {
        Self {
            inner_steps: 100,
            ..Self::default()
        }
    }

    pub fn dims(&self, input: usize, n_way: usize) -> Vec<usize> {
        let mut d = alloc::vec![input];
        d.extend(&self.hidden);
        d.push(n_way);
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerRates {
    pub support: f64,
    pub retrieval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adaptation {
    pub params: MlpParams,
    /// Sum over inner steps of the support-group gradient.
    pub support_grad_sum: MlpParams,
    /// Sum over inner steps of the retrieved-group gradient.
    pub retrieval_grad_sum: MlpParams,
}

/// Mean loss gradient over one group of rows; `None` when the group carries
/// no weight.
fn group_gradient(params: &MlpParams, rows: &FeatureMatrix, weights: &[f64]) -> Result<Option<MlpParams>> {
    if rows.is_empty() || weights.iter().sum::<f64>() <= 0.0 {
        return Ok(None);
    }
    let (_, g) = mlp_backward(params, &rows.data, &rows.labels, weights)?;
    Ok(Some(g))
}

pub fn maml_inner_adapt(
    params: &MlpParams,
    support_x: &FeatureMatrix,
    rates: InnerRates,
    config: &MamlConfig,
) -> Result<Adaptation> {
    let support = support_x.select(Origin::Support);
    let retrieved = support_x.select(Origin::Retrieved);
    let support_w = alloc::vec![1.0; support.rows()];
    let retrieved_w = if config.weighted_loss {
        retrieved.weights.clone()
    } else {
        alloc::vec![1.0; retrieved.rows()]
    };
    let mut theta = params.clone();
    let mut s_sum = params.zeros_like();
    let mut r_sum = params.zeros_like();
    for _ in 0..config.inner_steps {
        let gs = group_gradient(&theta, &support, &support_w)?;
        let gr = group_gradient(&theta, &retrieved, &retrieved_w)?;
        if let Some(g) = &gs {
            theta.axpy(-rates.support, g);
            s_sum.axpy(1.0, g);
        }
        if let Some(g) = &gr {
            theta.axpy(-rates.retrieval, g);
            r_sum.axpy(1.0, g);
        }
        if !theta.is_finite() {
            return Err(Error::NonFinite("inner adaptation"));
        }
    }
    Ok(Adaptation {
        params: theta,
        support_grad_sum: s_sum,
        retrieval_grad_sum: r_sum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaGradient {
    pub params: MlpParams,
    pub d_support_lr: f64,
    pub d_retrieval_lr: f64,
    /// Mean query loss at the adapted parameters.
    pub query_loss: f64,
}

#[derive(Debug, Clone)]
pub struct MamlLearner {
    pub params: MlpParams,
    pub rates: InnerRates,
    pub config: MamlConfig,
    optimizer: Adam,
    rate_optimizer: Adam,
}

impl MamlLearner {
    pub fn new(input_width: usize, n_way: usize, config: MamlConfig, seed: u64) -> Self {
        Self::from_params(MlpParams::init_orthogonal(&config.dims(input_width, n_way), seed, true), config)
    }

    pub fn from_params(params: MlpParams, config: MamlConfig) -> Self {
        let rates = InnerRates {
            support: config.inner_lr_support,
            retrieval: config.inner_lr_retrieval,
        };
        Self {
            optimizer: Adam::new(config.outer_lr, params.num_params()),
            rate_optimizer: Adam::new(config.outer_lr, 2),
            params,
            rates,
            config,
        }
    }

    pub fn adapt(&self, support_x: &FeatureMatrix) -> Result<Adaptation> {
        maml_inner_adapt(&self.params, support_x, self.rates, &self.config)
    }

    /// Batch-mean first-order meta-gradient over `(support_X, query_X)` pairs.
    pub fn meta_gradient(&self, batch: &[(FeatureMatrix, FeatureMatrix)]) -> Result<MetaGradient> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty meta-batch".into()));
        }
        let mut acc = MetaGradient {
            params: self.params.zeros_like(),
            d_support_lr: 0.0,
            d_retrieval_lr: 0.0,
            query_loss: 0.0,
        };
        for (support_x, query_x) in batch {
            let adapted = self.adapt(support_x)?;
            let (loss, g) = mlp_backward(
                &adapted.params,
                &query_x.data,
                &query_x.labels,
                &alloc::vec![1.0; query_x.rows()],
            )?;
            acc.params.axpy(1.0, &g);
            acc.d_support_lr -= g.dot(&adapted.support_grad_sum);
            acc.d_retrieval_lr -= g.dot(&adapted.retrieval_grad_sum);
            acc.query_loss += loss;
        }
        let inv = 1.0 / batch.len() as f64;
        acc.params.scale(inv);
        acc.d_support_lr *= inv;
        acc.d_retrieval_lr *= inv;
        acc.query_loss *= inv;
        if !acc.params.is_finite() || !acc.d_support_lr.is_finite() || !acc.d_retrieval_lr.is_finite() {
            return Err(Error::NonFinite("meta-gradient"));
        }
        Ok(acc)
    }

    pub fn apply(&mut self, mg: &MetaGradient) {
        self.optimizer.step(self.params.iter_mut(), mg.params.iter());
        if self.config.learn_inner_lrs {
            let mut rates = [self.rates.support, self.rates.retrieval];
            self.rate_optimizer
                .step(rates.iter_mut(), [mg.d_support_lr, mg.d_retrieval_lr].iter());
            self.rates.support = rates[0].clamp(MIN_INNER_LR, MAX_INNER_LR);
            self.rates.retrieval = rates[1].clamp(MIN_INNER_LR, MAX_INNER_LR);
        }
    }

    /// One outer update; returns the mean post-adaptation query loss.
    pub fn outer_step(&mut self, batch: &[(FeatureMatrix, FeatureMatrix)]) -> Result<f64> {
        let mg = self.meta_gradient(batch)?;
        self.apply(&mg);
        Ok(mg.query_loss)
    }

    pub fn predict(&self, support_x: &FeatureMatrix, query_x: &FeatureMatrix) -> Result<Vec<usize>> {
        let adapted = self.adapt(support_x)?;
        let out = adapted.params.forward_batch(&query_x.data)?;
        let n = adapted.params.output_dim();
        Ok(out.output.chunks_exact(n).map(argmax).collect())
    }
}

//! Prototypical networks: embed rows with the MLP head, average each class
//! into a prototype, classify queries by negative squared distance.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::argmax;
use super::loss::cross_entropy;
use super::mlp::MlpParams;
use crate::augment::{FeatureMatrix, Origin};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtoConfig {
    /// Head widths after the input; `[64]` is a single affine layer.
    pub hidden: Vec<usize>,
    pub outer_lr: f64,
    pub include_retrieved_in_prototypes: bool,
}

impl Default for ProtoConfig {
    fn default() -> Self {
        Self {
            hidden: alloc::vec![64],
            outer_lr: 0.001,
            include_retrieved_in_prototypes: true,
        }
    }
}

impl ProtoConfig {
    pub fn dims(&self, input: usize) -> Vec<usize> {
        let mut d = alloc::vec![input];
        d.extend(&self.hidden);
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtoOutput {
    pub loss: f64,
    pub predictions: Vec<usize>,
    /// Head gradient, present when run with `train = true`.
    pub grad: Option<MlpParams>,
    pub prototypes: Vec<Vec<f64>>,
}

pub fn protonet_episode(
    params: &MlpParams,
    support_x: &FeatureMatrix,
    query_x: &FeatureMatrix,
    config: &ProtoConfig,
    train: bool,
) -> Result<ProtoOutput> {
    let n = support_x.n_classes;
    if query_x.width != support_x.width {
        return Err(Error::DimMismatch {
            expected: support_x.width,
            got: query_x.width,
        });
    }
    let members: Vec<usize> = (0..support_x.rows())
        .filter(|&i| match support_x.origin[i] {
            Origin::Retrieved => config.include_retrieved_in_prototypes,
            _ => true,
        })
        .collect();
    let mut batch = Vec::with_capacity((members.len() + query_x.rows()) * support_x.width);
    for &i in &members {
        batch.extend_from_slice(support_x.row(i));
    }
    batch.extend_from_slice(&query_x.data);
    let fwd = params.forward_batch(&batch)?;
    let e = params.output_dim();
    let z = |r: usize| &fwd.output[r * e..(r + 1) * e];

    let mut counts = alloc::vec![0usize; n];
    let mut protos = alloc::vec![alloc::vec![0.0; e]; n];
    for (m, &i) in members.iter().enumerate() {
        let c = support_x.labels[i];
        counts[c] += 1;
        for (p, v) in protos[c].iter_mut().zip(z(m)) {
            *p += v;
        }
    }
    for (c, p) in protos.iter_mut().enumerate() {
        if counts[c] == 0 {
            return Err(Error::EmptyClass(c));
        }
        let inv = 1.0 / counts[c] as f64;
        p.iter_mut().for_each(|v| *v *= inv);
    }

    let q0 = members.len();
    let nq = query_x.rows();
    let mut logits = alloc::vec![0.0; nq * n];
    for q in 0..nq {
        let zq = z(q0 + q);
        for (c, p) in protos.iter().enumerate() {
            logits[q * n + c] = -zq.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
    }
    let predictions = logits.chunks_exact(n).map(argmax).collect();
    let lg = cross_entropy(&logits, n, &query_x.labels, &alloc::vec![1.0; nq])?;

    let grad = if train {
        let mut d_out = alloc::vec![0.0; fwd.rows * e];
        let mut d_proto = alloc::vec![alloc::vec![0.0; e]; n];
        for q in 0..nq {
            let zq = z(q0 + q);
            for (c, p) in protos.iter().enumerate() {
                let g = lg.d_logits[q * n + c];
                if g == 0.0 {
                    continue;
                }
                let dq = &mut d_out[(q0 + q) * e..(q0 + q + 1) * e];
                for k in 0..e {
                    let diff = zq[k] - p[k];
                    dq[k] -= 2.0 * g * diff;
                    d_proto[c][k] += 2.0 * g * diff;
                }
            }
        }
        for (m, &i) in members.iter().enumerate() {
            let c = support_x.labels[i];
            let inv = 1.0 / counts[c] as f64;
            for (d, &dp) in d_out[m * e..(m + 1) * e].iter_mut().zip(&d_proto[c]) {
                *d = dp * inv;
            }
        }
        Some(params.backward(&fwd, &d_out)?)
    } else {
        None
    };
    Ok(ProtoOutput {
        loss: lg.loss,
        predictions,
        grad,
        prototypes: protos,
    })
}

#[derive(Debug, Clone)]
pub struct ProtoNetLearner {
    pub params: MlpParams,
    pub config: ProtoConfig,
    optimizer: Adam,
}

impl ProtoNetLearner {
    pub fn new(input_width: usize, config: ProtoConfig, seed: u64) -> Self {
        Self::from_params(MlpParams::init_orthogonal(&config.dims(input_width), seed, false), config)
    }

    pub fn from_params(params: MlpParams, config: ProtoConfig) -> Self {
        Self {
            optimizer: Adam::new(config.outer_lr, params.num_params()),
            params,
            config,
        }
    }

    /// One Adam step on the batch-mean query loss; returns that loss.
    pub fn outer_step(&mut self, batch: &[(FeatureMatrix, FeatureMatrix)]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty meta-batch".into()));
        }
        let mut grad = self.params.zeros_like();
        let mut loss = 0.0;
        for (s, q) in batch {
            let out = protonet_episode(&self.params, s, q, &self.config, true)?;
            if let Some(g) = &out.grad {
                grad.axpy(1.0, g);
            }
            loss += out.loss;
        }
        let inv = 1.0 / batch.len() as f64;
        grad.scale(inv);
        if !grad.is_finite() {
            return Err(Error::NonFinite("prototype gradient"));
        }
        self.optimizer.step(self.params.iter_mut(), grad.iter());
        Ok(loss * inv)
    }

    pub fn predict(&self, support_x: &FeatureMatrix, query_x: &FeatureMatrix) -> Result<Vec<usize>> {
        Ok(protonet_episode(&self.params, support_x, query_x, &self.config, false)?.predictions)
    }
}

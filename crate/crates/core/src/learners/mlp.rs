//! Fully connected network with rectifiers between layers and an identity
//! output, plus its reverse-mode gradient.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::loss::cross_entropy;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{domain, stream_rng};

/// One affine layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: alloc::vec![0.0; inputs * outputs],
            bias: alloc::vec![0.0; outputs],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut d = Self::zeros(n, n);
        for i in 0..n {
            d.weights[i * n + i] = 1.0;
        }
        d
    }
}

/// `count` orthonormal vectors of length `len >= count`, by Gram-Schmidt on
/// Gaussian draws. Row-major.
fn orthonormal(rng: &mut impl Rng, count: usize, len: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(count * len);
    while out.len() < count * len {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        // Two passes keep the basis orthogonal to working precision.
        for _ in 0..2 {
            for b in out.chunks_exact(len) {
                let p = math::dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        if let Some(u) = math::normalized(&v) {
            out.extend(u);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

/// Activations kept from a batched forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub rows: usize,
    /// Input to each layer (after the rectifier for every layer but the first).
    inputs: Vec<Vec<f64>>,
    /// `rows × output_dim`.
    pub output: Vec<f64>,
}

impl MlpParams {
    /// Layer widths `dims[0] → dims[1] → …`, weights and biases drawn from
    /// `U(−1/√fan_in, 1/√fan_in)`.
    pub fn init(dims: &[usize], seed: u64) -> Self {
        let mut rng = stream_rng(seed, domain::PARAM_INIT, 0);
        let layers = dims
            .windows(2)
            .map(|w| {
                let bound = 1.0 / math::sqrt(w[0] as f64);
                let mut d = Dense::zeros(w[0], w[1]);
                for x in d.weights.iter_mut().chain(d.bias.iter_mut()) {
                    *x = rng.random_range(-bound..bound);
                }
                d
            })
            .collect();
        Self { layers }
    }

    /// Semi-orthogonal weights (gain √2 ahead of a rectifier, 1 at the
    /// output) and zero biases. With `zero_output` the last layer starts at
    /// zero, so every class begins with the same logit.
    pub fn init_orthogonal(dims: &[usize], seed: u64, zero_output: bool) -> Self {
        let mut rng = stream_rng(seed, domain::PARAM_INIT, 1);
        let n = dims.len().saturating_sub(1);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (inputs, outputs) = (w[0], w[1]);
                let mut d = Dense::zeros(inputs, outputs);
                if i + 1 == n && zero_output {
                    return d;
                }
                let gain = if i + 1 == n { 1.0 } else { core::f64::consts::SQRT_2 };
                // Orthonormalize along the longer side.
                let (count, len) = if outputs <= inputs { (outputs, inputs) } else { (inputs, outputs) };
                let basis = orthonormal(&mut rng, count, len);
                for o in 0..outputs {
                    for j in 0..inputs {
                        let v = if outputs <= inputs { basis[o * len + j] } else { basis[j * len + o] };
                        d.weights[o * inputs + j] = gain * v;
                    }
                }
                d
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.dims())
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        d.extend(self.layers.last().map(|l| l.outputs));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Every parameter, layer by layer, weights before bias.
    pub fn iter(&self) -> impl Iterator<Item = &f64> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    /// Inverse of [`MlpParams::to_flat`] for the given layer widths.
    pub fn from_flat(dims: &[usize], flat: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(dims);
        if p.num_params() != flat.len() {
            return Err(Error::DimMismatch {
                expected: p.num_params(),
                got: flat.len(),
            });
        }
        for (d, s) in p.iter_mut().zip(flat) {
            *d = *s;
        }
        Ok(p)
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &MlpParams) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.iter_mut() {
            *a *= s;
        }
    }

    pub fn dot(&self, other: &MlpParams) -> f64 {
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }

    /// Forward pass over `x`, a row-major `rows × input_dim` batch.
    pub fn forward_batch(&self, x: &[f64]) -> Result<Forward> {
        let width = self.input_dim();
        if width == 0 || x.len() % width != 0 {
            return Err(Error::DimMismatch {
                expected: width,
                got: x.len(),
            });
        }
        let rows = x.len() / width;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let last = li + 1 == self.layers.len();
            let mut out = alloc::vec![0.0; rows * layer.outputs];
            for r in 0..rows {
                let xr = &cur[r * layer.inputs..(r + 1) * layer.inputs];
                let yr = &mut out[r * layer.outputs..(r + 1) * layer.outputs];
                for (o, y) in yr.iter_mut().enumerate() {
                    let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    let z = math::dot(w, xr) + layer.bias[o];
                    *y = if last || z > 0.0 { z } else { 0.0 };
                }
            }
            inputs.push(core::mem::replace(&mut cur, out));
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("forward pass"));
        }
        Ok(Forward {
            rows,
            inputs,
            output: cur,
        })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.forward_batch(x)?.output)
    }

    /// Parameter gradient given `d_out = ∂L/∂output` for the batch of `fwd`.
    pub fn backward(&self, fwd: &Forward, d_out: &[f64]) -> Result<MlpParams> {
        let mut grad = self.zeros_like();
        let mut d = d_out.to_vec();
        if d.len() != fwd.rows * self.output_dim() {
            return Err(Error::DimMismatch {
                expected: fwd.rows * self.output_dim(),
                got: d.len(),
            });
        }
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let x = &fwd.inputs[li];
            let g = &mut grad.layers[li];
            let mut dx = if li > 0 {
                alloc::vec![0.0; fwd.rows * layer.inputs]
            } else {
                Vec::new()
            };
            for r in 0..fwd.rows {
                let xr = &x[r * layer.inputs..(r + 1) * layer.inputs];
                for o in 0..layer.outputs {
                    let go = d[r * layer.outputs + o];
                    if go == 0.0 {
                        continue;
                    }
                    g.bias[o] += go;
                    let gw = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (a, &b) in gw.iter_mut().zip(xr) {
                        *a += go * b;
                    }
                    if li > 0 {
                        let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        let dxr = &mut dx[r * layer.inputs..(r + 1) * layer.inputs];
                        for (a, &b) in dxr.iter_mut().zip(w) {
                            *a += go * b;
                        }
                    }
                }
            }
            if li > 0 {
                // Rectifier: the layer input is positive exactly where the
                // previous pre-activation was.
                for (dv, &xv) in dx.iter_mut().zip(x) {
                    if xv <= 0.0 {
                        *dv = 0.0;
                    }
                }
                d = dx;
            }
        }
        if !grad.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(grad)
    }
}

/// Logits for one feature row.
pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    params.forward(x)
}

/// Weighted cross-entropy of `params` on a row-major batch and its gradient.
pub fn mlp_backward(params: &MlpParams, batch: &[f64], labels: &[usize], weights: &[f64]) -> Result<(f64, MlpParams)> {
    let fwd = params.forward_batch(batch)?;
    if fwd.rows != labels.len() {
        return Err(Error::DimMismatch {
            expected: fwd.rows,
            got: labels.len(),
        });
    }
    let lg = cross_entropy(&fwd.output, params.output_dim(), labels, weights)?;
    Ok((lg.loss, params.backward(&fwd, &lg.d_logits)?))
}

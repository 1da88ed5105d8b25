//! Learner checkpoints: `"RAFK"`, version `u32`, header length `u64`, a JSON
//! header, parameter count `u64`, then the parameters as little-endian `f64`
//! in layer order (weights then bias per layer).

use std::fs;
use std::path::Path;

use rafic_core::learners::{InnerRates, MlpParams, Method, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"RAFK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub method: Method,
    pub config: RunConfig,
    pub step: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    /// Learned inner-loop rates, MAML only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_rates: Option<InnerRates>,
}

pub fn save_checkpoint(path: &Path, header: &CheckpointHeader, params: &MlpParams) -> Result<()> {
    if header.dims != params.dims() {
        return Err(Error::Data(format!(
            "checkpoint header dims {:?} do not match parameters {:?}",
            header.dims,
            params.dims()
        )));
    }
    let json = serde_json::to_vec(header).map_err(|e| Error::json(path, e))?;
    let mut out = Vec::with_capacity(24 + json.len() + 8 * params.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(params.num_params() as u64).to_le_bytes());
    for x in params.iter() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, MlpParams)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut rest = bytes.as_slice();
    let mut take = |n: usize, what: &str| -> Result<&[u8]> {
        if rest.len() < n {
            return Err(Error::header(path, format!("truncated {what}")));
        }
        let (head, tail) = rest.split_at(n);
        rest = tail;
        Ok(head)
    };
    if take(4, "magic")? != MAGIC {
        return Err(Error::header(path, "bad magic"));
    }
    let version = u32::from_le_bytes(take(4, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::header(path, format!("unsupported version {version}")));
    }
    let json_len = u64::from_le_bytes(take(8, "header length")?.try_into().unwrap()) as usize;
    let header: CheckpointHeader =
        serde_json::from_slice(take(json_len, "header")?).map_err(|e| Error::json(path, e))?;
    let count = u64::from_le_bytes(take(8, "parameter count")?.try_into().unwrap()) as usize;
    let blob = take(count.saturating_mul(8), "parameters")?;
    if !rest.is_empty() {
        return Err(Error::header(path, "trailing bytes after parameters"));
    }
    let flat: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let params = MlpParams::from_flat(&header.dims, &flat)?;
    Ok((header, params))
}

//! `.gsn` parameter files: one JSON header line, then little-endian f32
//! parameters, row-major per layer.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{GsnStack, HIDDEN, NUM_PARAMS};
use crate::{Error, Result};

pub const ARCHITECTURE: &str = "mlp-3-16-16-3-relu";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub architecture: String,
    pub hidden: usize,
    pub layers: usize,
    pub params_per_layer: usize,
    pub seed: u64,
    pub epoch: usize,
    pub loss: f64,
}

impl CheckpointHeader {
    pub fn new(seed: u64, epoch: usize, loss: f64) -> Self {
        CheckpointHeader {
            architecture: ARCHITECTURE.into(),
            hidden: HIDDEN,
            layers: 2,
            params_per_layer: NUM_PARAMS,
            seed,
            epoch,
            loss,
        }
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, stack: &GsnStack, header: &CheckpointHeader) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = serde_json::to_vec(header)?;
    bytes.push(b'\n');
    for v in stack.to_flat() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(GsnStack, CheckpointHeader)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: String| Error::Header {
        path: path.to_path_buf(),
        message: m,
    };
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header line".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(e.to_string()))?;
    if header.architecture != ARCHITECTURE
        || header.hidden != HIDDEN
        || header.layers != 2
        || header.params_per_layer != NUM_PARAMS
    {
        return Err(bad(format!("unsupported architecture {header:?}")));
    }
    let payload = &bytes[nl + 1..];
    let expected = 2 * NUM_PARAMS * 4;
    if payload.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: payload.len(),
        });
    }
    let flat: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok((GsnStack::from_flat(&flat), header))
}

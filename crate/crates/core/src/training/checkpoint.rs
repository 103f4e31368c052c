//! `model.hagnn` container: magic, format version, a length-prefixed JSON
//! header, then little-endian f64 blocks for the parameters and the two Adam
//! moment sets, all in registration order.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{HaGnn, ModelDims, ModelState, TrainConfig};
use crate::tensor::{AdamState, Matrix, ParamStore};

pub const CHECKPOINT_FILE: &str = "model.hagnn";
pub const MAGIC: &[u8; 8] = b"HAGNNCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint corrupt: {0}")]
    Corrupt(String),
    #[error("checkpoint version {0} is not supported")]
    Version(u32),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    dims: ModelDims,
    tensors: Vec<TensorEntry>,
    adam_step: u64,
    payload_len: u64,
    payload_sha256: String,
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Corrupt(msg.into())
}

pub fn encode(state: &ModelState) -> Result<Vec<u8>, CheckpointError> {
    let mut payload = Vec::with_capacity(state.params.num_scalars() * 24);
    for block in [state.params.values(), &state.adam.first, &state.adam.second] {
        for m in block {
            for v in m.as_slice() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let header = Header {
        config: state.config.clone(),
        dims: state.dims,
        tensors: state
            .params
            .ids()
            .map(|id| {
                let (rows, cols) = state.params.get(id).shape();
                TensorEntry {
                    name: state.params.name(id).to_string(),
                    rows,
                    cols,
                }
            })
            .collect(),
        adam_step: state.adam.step,
        payload_len: payload.len() as u64,
        payload_sha256: hex::encode(Sha256::digest(&payload)),
    };
    let json = serde_json::to_vec(&header).map_err(|e| corrupt(e.to_string()))?;
    let mut out = Vec::with_capacity(20 + json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
    if bytes.len() < n {
        return Err(corrupt(format!("truncated {what}")));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn decode(mut bytes: &[u8]) -> Result<ModelState, CheckpointError> {
    if take(&mut bytes, 8, "magic")? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4, "version")?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let header_len = u64::from_le_bytes(take(&mut bytes, 8, "header length")?.try_into().expect("8 bytes"));
    let header_len = usize::try_from(header_len).map_err(|_| corrupt("header length"))?;
    let header: Header =
        serde_json::from_slice(take(&mut bytes, header_len, "header")?).map_err(|e| corrupt(format!("header: {e}")))?;
    if bytes.len() as u64 != header.payload_len {
        return Err(corrupt(format!(
            "payload is {} bytes, header says {}",
            bytes.len(),
            header.payload_len
        )));
    }
    if hex::encode(Sha256::digest(bytes)) != header.payload_sha256 {
        return Err(corrupt("payload digest mismatch"));
    }

    let mut params = ParamStore::new();
    let model = HaGnn::init(&mut params, &header.config, header.dims).map_err(|e| corrupt(e.to_string()))?;
    if params.len() != header.tensors.len() {
        return Err(corrupt(format!(
            "{} tensors stored, model has {}",
            header.tensors.len(),
            params.len()
        )));
    }
    for (id, entry) in params.ids().zip(&header.tensors) {
        if params.name(id) != entry.name || params.get(id).shape() != (entry.rows, entry.cols) {
            return Err(corrupt(format!("tensor `{}` does not match the model layout", entry.name)));
        }
    }
    let expected: usize = header.tensors.iter().map(|t| t.rows * t.cols).sum::<usize>() * 3 * 8;
    if bytes.len() != expected {
        return Err(corrupt(format!("payload is {} bytes, layout needs {expected}", bytes.len())));
    }
    let read_block = |bytes: &mut &[u8]| -> Result<Vec<Matrix>, CheckpointError> {
        header
            .tensors
            .iter()
            .map(|t| {
                let raw = take(bytes, t.rows * t.cols * 8, &t.name)?;
                let data = raw
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect();
                Matrix::from_vec(t.rows, t.cols, data).map_err(|e| corrupt(e.to_string()))
            })
            .collect()
    };
    let values = read_block(&mut bytes)?;
    let first = read_block(&mut bytes)?;
    let second = read_block(&mut bytes)?;
    for (slot, v) in params.values_mut().iter_mut().zip(values) {
        *slot = v;
    }
    Ok(ModelState {
        config: header.config,
        dims: header.dims,
        model,
        params,
        adam: AdamState {
            step: header.adam_step,
            first,
            second,
        },
    })
}

pub fn save(state: &ModelState, path: &Path) -> Result<(), CheckpointError> {
    let bytes = encode(state)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ModelState, CheckpointError> {
    decode(&std::fs::read(path)?)
}

//! Versioned binary model checkpoints.
//!
//! Layout: 8-byte magic, u32 format version, u64 spec length, the
//! JSON-serialized [`ModelSpec`], u64 parameter count, then every parameter
//! as a little-endian f64 in layer order (weights before bias per layer).
//! Save/load round-trips byte-exactly.

use std::path::Path;

use crate::cnn::model::ModelSpec;
use crate::cnn::params::{init_params, ParamSet};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"WEARNET\0";
const VERSION: u32 = 1;

pub fn encode(spec: &ModelSpec, params: &ParamSet) -> Result<Vec<u8>> {
    if spec.layers.len() != params.layers.len() {
        return Err(Error::Checkpoint("params do not match spec".into()));
    }
    let spec_json = serde_json::to_vec(spec).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let count = params.len() as u64;
    let mut out = Vec::with_capacity(24 + spec_json.len() + count as usize * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(spec_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&spec_json);
    out.extend_from_slice(&count.to_le_bytes());
    for pair in params.layers.iter().flatten() {
        for &v in pair.weights.iter().chain(&pair.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(ModelSpec, ParamSet)> {
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let mut pos = 0usize;
    if take(&mut pos, 8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let spec_len = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    let spec: ModelSpec = serde_json::from_slice(take(&mut pos, spec_len)?)
        .map_err(|e| Error::Checkpoint(format!("bad spec json: {e}")))?;
    let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;

    // Parameter shapes come from the spec; seed value is irrelevant since
    // every value is overwritten.
    let mut params = init_params(&spec, 0)?;
    if params.len() != count {
        return Err(Error::Checkpoint(format!(
            "parameter count {count} does not match spec ({})",
            params.len()
        )));
    }
    for pair in params.layers.iter_mut().flatten() {
        for v in pair.weights.iter_mut().chain(pair.bias.iter_mut()) {
            *v = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        }
    }
    if pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok((spec, params))
}

pub fn save(path: &Path, spec: &ModelSpec, params: &ParamSet) -> Result<()> {
    std::fs::write(path, encode(spec, params)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(ModelSpec, ParamSet)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

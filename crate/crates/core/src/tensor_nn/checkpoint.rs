//! Checkpoint file: a 4-byte little-endian header length, a JSON header
//! `{config, param_count, created_by, format_version}` and the parameters as
//! little-endian `f64` in flatten order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{unflatten_params, Network, NetworkConfig};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub created_by: String,
    pub config: NetworkConfig,
    pub param_count: usize,
    /// Model-level metadata (kind, rotation mode, normalization constants).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<serde_json::Value>,
}

pub fn checkpoint_bytes(net: &Network, envelope: Option<serde_json::Value>) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        format_version: CHECKPOINT_FORMAT_VERSION,
        created_by: concat!("crashdecomp ", env!("CARGO_PKG_VERSION")).to_string(),
        config: net.config().clone(),
        param_count: net.param_count(),
        envelope,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(4 + json.len() + 8 * net.param_count());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

pub fn parse_checkpoint(bytes: &[u8], origin: &Path) -> Result<(Network, Option<serde_json::Value>)> {
    if bytes.len() < 4 {
        return Err(Error::format(origin, "file shorter than the header-length prefix"));
    }
    let header_len = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
    if bytes.len() < 4 + header_len {
        return Err(Error::format(
            origin,
            format!("header needs {header_len} bytes, only {} present", bytes.len() - 4),
        ));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[4..4 + header_len])
        .map_err(|e| Error::format(origin, format!("bad checkpoint header: {e}")))?;
    if header.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::format(
            origin,
            format!(
                "checkpoint format version {} unsupported (expected {CHECKPOINT_FORMAT_VERSION})",
                header.format_version
            ),
        ));
    }
    let blob = &bytes[4 + header_len..];
    let expected = header.param_count * 8;
    if blob.len() != expected || header.param_count != header.config.param_count() {
        return Err(Error::format(
            origin,
            format!("parameter blob: expected {expected} bytes, found {}", blob.len()),
        ));
    }
    let params = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((unflatten_params(header.config, params)?, header.envelope))
}

pub fn write_checkpoint(path: &Path, net: &Network, envelope: Option<serde_json::Value>) -> Result<()> {
    let bytes = checkpoint_bytes(net, envelope)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(Network, Option<serde_json::Value>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes, path)
}

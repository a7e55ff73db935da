//! Binary parameter file.
//!
//! ```text
//! magic    8 bytes   "SGANPRM\0"
//! version  u32 LE    1
//! hlen     u32 LE    length of the JSON header in bytes
//! header   hlen      {"sections":[{"name":..,"rows":..,"cols":..},..]}
//! payload            rows*cols f64 LE per section, in header order
//! ```

use serde::{Deserialize, Serialize};

use super::tensor::Tensor2;
use crate::error::{Error, Result};

pub const PARAM_MAGIC: &[u8; 8] = b"SGANPRM\0";
pub const PARAM_VERSION: u32 = 1;
const MAX_HEADER_LEN: usize = 16 << 20;

#[derive(Serialize, Deserialize)]
struct SectionHeader {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    sections: Vec<SectionHeader>,
}

pub fn encode_params(sections: &[(String, Tensor2)]) -> Vec<u8> {
    let header = Header {
        sections: sections
            .iter()
            .map(|(name, t)| SectionHeader { name: name.clone(), rows: t.rows(), cols: t.cols() })
            .collect(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let payload: usize = sections.iter().map(|(_, t)| t.data().len() * 8).sum();
    let mut out = Vec::with_capacity(16 + header.len() + payload);
    out.extend_from_slice(PARAM_MAGIC);
    out.extend_from_slice(&PARAM_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, t) in sections {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::format("parameter file", msg)
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).ok_or_else(|| bad("truncated preamble"))
}

pub fn decode_params(bytes: &[u8]) -> Result<Vec<(String, Tensor2)>> {
    if bytes.len() < 16 || &bytes[..8] != PARAM_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(bytes, 8)?;
    if version != PARAM_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let hlen = read_u32(bytes, 12)? as usize;
    if hlen > MAX_HEADER_LEN {
        return Err(bad(format!("header length {hlen} too large")));
    }
    let header_bytes = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(header_bytes).map_err(|e| bad(format!("header: {e}")))?;

    let mut payload = &bytes[16 + hlen..];
    let mut total: usize = 0;
    for s in &header.sections {
        let n = s
            .rows
            .checked_mul(s.cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| bad(format!("section {} shape overflows", s.name)))?;
        total = total.checked_add(n).ok_or_else(|| bad("payload size overflows"))?;
    }
    if total != payload.len() {
        return Err(bad(format!("payload is {} bytes, header describes {total}", payload.len())));
    }

    let mut out = Vec::with_capacity(header.sections.len());
    for s in header.sections {
        if out.iter().any(|(n, _): &(String, Tensor2)| *n == s.name) {
            return Err(bad(format!("duplicate section {}", s.name)));
        }
        let n = s.rows * s.cols;
        let (chunk, rest) = payload.split_at(n * 8);
        payload = rest;
        let data = chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        let t = Tensor2::from_vec(s.rows, s.cols, data).map_err(|e| bad(format!("section {}: {e}", s.name)))?;
        out.push((s.name, t));
    }
    Ok(out)
}

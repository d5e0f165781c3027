//! Raw value files produced by `generate` and consumed by `build`/`evaluate`.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic    4 bytes  "UDDV"
//! version  4 bytes  u32 = 1
//! n        8 bytes  u64
//! values   n x 8-byte double
//! n        8 bytes  u64, repeated as a torn-write guard
//! ```
//!
//! A file holding n values is therefore exactly 24 + 8n bytes.

use thiserror::Error;

pub const DATA_MAGIC: [u8; 4] = *b"UDDV";
pub const DATA_VERSION: u32 = 1;

const HEADER_LEN: usize = 16;
const TRAILER_LEN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DataFileError {
    #[error("bad data magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported data version {0}")]
    BadVersion(u32),
    #[error("truncated data file: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("trailing count {trailer} does not match header count {header}")]
    TrailerMismatch { header: u64, trailer: u64 },
    #[error("data file has {0} trailing byte(s)")]
    TrailingBytes(usize),
}

/// Serialize values into the UDDV byte layout.
pub fn encode_values(values: &[f64]) -> Vec<u8> {
    let n = values.len() as u64;
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 8 + TRAILER_LEN);
    out.extend_from_slice(&DATA_MAGIC);
    out.extend_from_slice(&DATA_VERSION.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    for value in values {
        out.extend_from_slice(&value.to_le_bytes());
    }
    out.extend_from_slice(&n.to_le_bytes());
    out
}

/// Parse and validate a UDDV byte stream.
pub fn decode_values(bytes: &[u8]) -> Result<Vec<f64>, DataFileError> {
    if bytes.len() < HEADER_LEN {
        return Err(DataFileError::Truncated {
            need: HEADER_LEN,
            have: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != DATA_MAGIC {
        return Err(DataFileError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != DATA_VERSION {
        return Err(DataFileError::BadVersion(version));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let need = HEADER_LEN
        .checked_add((n as usize).checked_mul(8).unwrap_or(usize::MAX))
        .and_then(|len| len.checked_add(TRAILER_LEN))
        .unwrap_or(usize::MAX);
    if bytes.len() < need {
        return Err(DataFileError::Truncated {
            need,
            have: bytes.len(),
        });
    }
    if bytes.len() > need {
        return Err(DataFileError::TrailingBytes(bytes.len() - need));
    }
    let trailer_off = need - TRAILER_LEN;
    let trailer = u64::from_le_bytes(bytes[trailer_off..].try_into().unwrap());
    if trailer != n {
        return Err(DataFileError::TrailerMismatch {
            header: n,
            trailer,
        });
    }
    let values = bytes[HEADER_LEN..trailer_off]
        .chunks_exact(8)
        .map(|chunk| f64::from_le_bytes(chunk.try_into().unwrap()))
        .collect();
    Ok(values)
}

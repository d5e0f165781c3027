//! Bit-exact sketch serialization.
//!
//! Envelope layout, all integers little-endian:
//!
//! ```text
//! magic        4 bytes  "UDDS"
//! version      1 byte   = 1
//! policy       1 byte   0 = uniform, 1 = dd-first, 2 = dd-last
//! alpha0       8 bytes  IEEE-754 double
//! m            4 bytes  u32
//! epoch        4 bytes  u32
//! n            8 bytes  u64
//! bucket_count 4 bytes  u32
//! records      bucket_count x (key i64, count u64), key ascending
//! min_seen     8 bytes  double, NaN when absent
//! max_seen     8 bytes  double, NaN when absent
//! ```
//!
//! Keys are sorted, so equal sketches encode to equal bytes and byte
//! equality is a valid equality proxy. A JSON text form is available for
//! debugging; the binary form is authoritative.

use serde_json::json;
use thiserror::Error;

use crate::config::{CollapsePolicy, SketchConfig};
use crate::sketch::QuantileSketch;

pub const MAGIC: [u8; 4] = *b"UDDS";
pub const VERSION: u8 = 1;

const HEADER_LEN: usize = 4 + 1 + 1 + 8 + 4 + 4 + 8 + 4;
const RECORD_LEN: usize = 16;
const FOOTER_LEN: usize = 16;

/// Decoding failures, split by what went wrong with the bytes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported envelope version {0}")]
    BadVersion(u8),
    #[error("unknown policy code {0}")]
    BadPolicy(u8),
    #[error("truncated envelope: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("corrupt envelope: {0}")]
    Corrupt(String),
}

/// Serialize a sketch to its canonical byte form.
pub fn encode(sketch: &QuantileSketch) -> Vec<u8> {
    let buckets = sketch.sorted_buckets();
    let mut out = Vec::with_capacity(HEADER_LEN + buckets.len() * RECORD_LEN + FOOTER_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(sketch.config().policy().code());
    out.extend_from_slice(&sketch.config().alpha0().to_le_bytes());
    out.extend_from_slice(&sketch.config().max_buckets().to_le_bytes());
    out.extend_from_slice(&sketch.epoch().to_le_bytes());
    out.extend_from_slice(&sketch.count().to_le_bytes());
    out.extend_from_slice(&(buckets.len() as u32).to_le_bytes());
    for (key, count) in buckets {
        out.extend_from_slice(&key.to_le_bytes());
        out.extend_from_slice(&count.to_le_bytes());
    }
    out.extend_from_slice(&sketch.min_seen().unwrap_or(f64::NAN).to_le_bytes());
    out.extend_from_slice(&sketch.max_seen().unwrap_or(f64::NAN).to_le_bytes());
    out
}

/// Reconstruct a sketch, validating the envelope invariants.
pub fn decode(bytes: &[u8]) -> Result<QuantileSketch, CodecError> {
    let mut reader = Reader::new(bytes);
    let magic = reader.array::<4>()?;
    if magic != MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    let version = reader.u8()?;
    if version != VERSION {
        return Err(CodecError::BadVersion(version));
    }
    let policy_code = reader.u8()?;
    let policy =
        CollapsePolicy::from_code(policy_code).ok_or(CodecError::BadPolicy(policy_code))?;
    let alpha0 = reader.f64()?;
    let m = reader.u32()?;
    let epoch = reader.u32()?;
    let n = reader.u64()?;
    let bucket_count = reader.u32()? as usize;

    let need = HEADER_LEN + bucket_count * RECORD_LEN + FOOTER_LEN;
    if bytes.len() < need {
        return Err(CodecError::Truncated {
            need,
            have: bytes.len(),
        });
    }
    if bytes.len() > need {
        return Err(CodecError::Corrupt(format!(
            "{} trailing byte(s)",
            bytes.len() - need
        )));
    }

    let config = SketchConfig::new(alpha0, m, policy)
        .map_err(|e| CodecError::Corrupt(e.to_string()))?;
    if bucket_count > m as usize {
        return Err(CodecError::Corrupt(format!(
            "{bucket_count} buckets exceed the limit of {m}"
        )));
    }

    let mut buckets = Vec::with_capacity(bucket_count);
    let mut previous_key: Option<i64> = None;
    let mut total: u64 = 0;
    for _ in 0..bucket_count {
        let key = reader.i64()?;
        let count = reader.u64()?;
        if let Some(prev) = previous_key {
            if key <= prev {
                return Err(CodecError::Corrupt(format!(
                    "bucket keys not strictly increasing at {key}"
                )));
            }
        }
        if count == 0 {
            return Err(CodecError::Corrupt(format!("zero count for bucket {key}")));
        }
        total = total
            .checked_add(count)
            .ok_or_else(|| CodecError::Corrupt("bucket counts overflow".into()))?;
        previous_key = Some(key);
        buckets.push((key, count));
    }
    if total != n {
        return Err(CodecError::Corrupt(format!(
            "bucket counts sum to {total}, envelope claims n = {n}"
        )));
    }

    let min_seen = reader.f64().map(none_if_nan)?;
    let max_seen = reader.f64().map(none_if_nan)?;

    QuantileSketch::from_parts(config, epoch, n, buckets, min_seen, max_seen)
        .map_err(|e| CodecError::Corrupt(e.to_string()))
}

/// Debug-oriented JSON rendering of the same fields.
pub fn encode_text(sketch: &QuantileSketch) -> String {
    let buckets: Vec<[serde_json::Value; 2]> = sketch
        .sorted_buckets()
        .into_iter()
        .map(|(k, c)| [json!(k), json!(c)])
        .collect();
    json!({
        "magic": "UDDS",
        "version": VERSION,
        "policy": sketch.config().policy().name(),
        "alpha0": sketch.config().alpha0(),
        "m": sketch.config().max_buckets(),
        "epoch": sketch.epoch(),
        "n": sketch.count(),
        "buckets": buckets,
        "min_seen": sketch.min_seen(),
        "max_seen": sketch.max_seen(),
    })
    .to_string()
}

fn none_if_nan(x: f64) -> Option<f64> {
    if x.is_nan() {
        None
    } else {
        Some(x)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(CodecError::Truncated {
                need: end,
                have: self.bytes.len(),
            });
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.array::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn i64(&mut self) -> Result<i64, CodecError> {
        Ok(i64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CollapsePolicy;

    fn sample_sketch() -> QuantileSketch {
        let config = SketchConfig::new(0.01, 32, CollapsePolicy::Uniform).unwrap();
        let mut sketch = QuantileSketch::new(config);
        for x in [1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 40.0] {
            sketch.insert(x).unwrap();
        }
        sketch
    }

    fn assert_same_fields(a: &QuantileSketch, b: &QuantileSketch) {
        assert_eq!(a.config(), b.config());
        assert_eq!(a.epoch(), b.epoch());
        assert_eq!(a.count(), b.count());
        assert_eq!(a.sorted_buckets(), b.sorted_buckets());
        assert_eq!(a.min_seen(), b.min_seen());
        assert_eq!(a.max_seen(), b.max_seen());
        assert_eq!(a.gamma().to_bits(), b.gamma().to_bits());
    }

    #[test]
    fn empty_sketch_encodes_to_bare_envelope() {
        let config = SketchConfig::new(0.001, 512, CollapsePolicy::Uniform).unwrap();
        let sketch = QuantileSketch::new(config);
        let bytes = encode(&sketch);
        assert_eq!(bytes.len(), HEADER_LEN + FOOTER_LEN);
        let back = decode(&bytes).unwrap();
        assert_same_fields(&sketch, &back);
        assert_eq!(back.size(), 0);
    }

    #[test]
    fn known_store_produces_exact_records() {
        let config = SketchConfig::new(0.01, 32, CollapsePolicy::Uniform).unwrap();
        let sketch =
            QuantileSketch::from_parts(config, 0, 7, [(0i64, 1u64), (1, 5), (5, 1)], None, None)
                .unwrap();
        let bytes = encode(&sketch);
        assert_eq!(bytes.len(), HEADER_LEN + 3 * RECORD_LEN + FOOTER_LEN);
        let record = |i: usize| {
            let off = HEADER_LEN + i * RECORD_LEN;
            (
                i64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()),
                u64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap()),
            )
        };
        assert_eq!(record(0), (0, 1));
        assert_eq!(record(1), (1, 5));
        assert_eq!(record(2), (5, 1));
    }

    #[test]
    fn records_are_key_ordered() {
        let sketch = sample_sketch();
        let bytes = encode(&sketch);
        let decoded = decode(&bytes).unwrap();
        let keys: Vec<i64> = decoded.sorted_buckets().iter().map(|&(k, _)| k).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn round_trip_preserves_all_fields() {
        let sketch = sample_sketch();
        let back = decode(&encode(&sketch)).unwrap();
        assert_same_fields(&sketch, &back);
    }

    #[test]
    fn encoding_is_canonical() {
        let sketch = sample_sketch();
        let once = encode(&sketch);
        let again = encode(&decode(&once).unwrap());
        assert_eq!(once, again);
    }

    #[test]
    fn decoded_epoch_replays_gamma_squarings() {
        let config = SketchConfig::new(0.001, 2, CollapsePolicy::Uniform).unwrap();
        let mut sketch = QuantileSketch::new(config);
        for x in [1.0, 10.0, 100.0, 1000.0, 2.5] {
            sketch.insert(x).unwrap();
        }
        assert!(sketch.epoch() > 0);
        let back = decode(&encode(&sketch)).unwrap();
        assert_same_fields(&sketch, &back);
    }

    #[test]
    fn flipped_magic_is_a_format_error() {
        let mut bytes = encode(&sample_sketch());
        bytes[0] ^= 0xff;
        assert!(matches!(decode(&bytes), Err(CodecError::BadMagic(_))));
    }

    #[test]
    fn unknown_version_and_policy_are_rejected() {
        let mut bytes = encode(&sample_sketch());
        bytes[4] = 9;
        assert_eq!(decode(&bytes).unwrap_err(), CodecError::BadVersion(9));
        let mut bytes = encode(&sample_sketch());
        bytes[5] = 7;
        assert_eq!(decode(&bytes).unwrap_err(), CodecError::BadPolicy(7));
    }

    #[test]
    fn duplicate_key_is_corruption() {
        let sketch = sample_sketch();
        let mut bytes = encode(&sketch);
        // Overwrite the second record's key with the first record's key.
        let first_key = &bytes[HEADER_LEN..HEADER_LEN + 8].to_vec();
        bytes[HEADER_LEN + RECORD_LEN..HEADER_LEN + RECORD_LEN + 8].copy_from_slice(first_key);
        assert!(matches!(decode(&bytes), Err(CodecError::Corrupt(_))));
    }

    #[test]
    fn count_sum_mismatch_is_corruption() {
        let mut bytes = encode(&sample_sketch());
        // Bump the first record's count without touching n.
        let off = HEADER_LEN + 8;
        bytes[off] = bytes[off].wrapping_add(1);
        assert!(matches!(decode(&bytes), Err(CodecError::Corrupt(_))));
    }

    #[test]
    fn truncation_is_a_length_error() {
        let bytes = encode(&sample_sketch());
        for cut in [3, HEADER_LEN - 1, bytes.len() - 1] {
            assert!(
                matches!(decode(&bytes[..cut]), Err(CodecError::Truncated { .. })),
                "cut={cut}"
            );
        }
    }

    #[test]
    fn trailing_bytes_are_corruption() {
        let mut bytes = encode(&sample_sketch());
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(CodecError::Corrupt(_))));
    }

    #[test]
    fn absent_extremes_round_trip_as_nan() {
        let config = SketchConfig::new(0.01, 8, CollapsePolicy::Uniform).unwrap();
        let sketch = QuantileSketch::new(config);
        let back = decode(&encode(&sketch)).unwrap();
        assert_eq!(back.min_seen(), None);
        assert_eq!(back.max_seen(), None);
    }

    #[test]
    fn text_form_lists_buckets_as_pairs() {
        let sketch = sample_sketch();
        let text = encode_text(&sketch);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["magic"], "UDDS");
        assert_eq!(parsed["policy"], "uniform");
        assert_eq!(parsed["n"], 7);
        let buckets = parsed["buckets"].as_array().unwrap();
        assert_eq!(buckets.len(), sketch.size());
        assert!(buckets.iter().all(|b| b.as_array().unwrap().len() == 2));
    }
}

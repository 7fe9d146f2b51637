//! Coefficient vectors and support sets on disk.
//!
//! Coefficients are either a JSON array of numbers or a raw stream of
//! little-endian `f64` values. Supports are JSON arrays of strictly
//! increasing 0-based indices.

use crate::error::{domain, Result};

pub fn parse_coefficients(bytes: &[u8]) -> Result<Vec<f64>> {
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'[') {
        return serde_json::from_slice(bytes).map_err(|e| domain!("invalid coefficient JSON: {e}"));
    }
    if bytes.len() % 8 != 0 {
        return Err(domain!("binary coefficients must be a multiple of 8 bytes, got {}", bytes.len()));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

pub fn coefficients_to_le_bytes(a: &[f64]) -> Vec<u8> {
    a.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn parse_support(text: &str, n: usize) -> Result<Vec<usize>> {
    let s: Vec<usize> = serde_json::from_str(text).map_err(|e| domain!("invalid support JSON: {e}"))?;
    super::support::indicator(n, &s)?;
    Ok(s)
}

//! Helpers for binary vectors stored as one `u8` (0 or 1) per position.

use crate::{Error, Result};

pub fn weight(v: &[u8]) -> usize {
    v.iter().filter(|&&b| b != 0).count()
}

pub fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

pub fn xor_in_place(a: &mut [u8], b: &[u8]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

/// Parity of the overlap between a support list and a dense vector.
pub fn support_parity(support: &[usize], v: &[u8]) -> u8 {
    support.iter().fold(0u8, |acc, &j| acc ^ v[j])
}

/// Symmetric difference of two sorted supports, i.e. the support of their XOR.
pub fn support_xor(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Number of common positions of two sorted supports.
pub fn support_overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Packs bits MSB-first into bytes and hex-encodes them.
pub fn to_hex(v: &[u8]) -> String {
    let mut bytes = vec![0u8; v.len().div_ceil(8)];
    for (i, &b) in v.iter().enumerate() {
        if b != 0 {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
    }
    hex::encode(bytes)
}

/// Inverse of [`to_hex`]; `len` is the number of bits to recover.
pub fn from_hex(s: &str, len: usize) -> Result<Vec<u8>> {
    let bytes = hex::decode(s.trim()).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("bad hex payload: {e}"),
    })?;
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::LengthMismatch {
            expected: len.div_ceil(8),
            actual: bytes.len(),
        });
    }
    let bits: Vec<u8> = (0..len)
        .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1)
        .collect();
    // padding bits must be clear so the encoding is canonical
    let trailing = (len..bytes.len() * 8).any(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1);
    if trailing {
        return Err(Error::Parse {
            line: 0,
            msg: "nonzero padding bits in hex payload".into(),
        });
    }
    Ok(bits)
}

/// Packs a binary vector into 64-bit words, bit `i` at word `i / 64`, position `i % 64`.
pub fn pack(v: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; v.len().div_ceil(64)];
    for (i, &b) in v.iter().enumerate() {
        if b != 0 {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

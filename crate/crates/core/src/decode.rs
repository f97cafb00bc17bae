//! Bitflip decoding with optional multi-readout soft weights.
//!
//! Each iteration scores every position by the syndrome weight the word
//! would have after flipping it, plus a per-position penalty, and flips the
//! lowest-scoring position (lowest index on ties). Scores are kept
//! incrementally: flipping bit `j` toggles only the checks on column `j`.

use std::collections::HashSet;

use crate::bits;
use crate::sparsemat::SparseBinaryMatrix;
use crate::{Error, Result};

/// Per-position flip penalties derived from readout agreement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoftWeights {
    pub delta: Vec<u32>,
    pub delta1: u32,
    pub delta2: u32,
}

impl SoftWeights {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}

/// `delta1` where all readouts agree, `delta2` elsewhere.
pub fn derive_soft(readouts: &[&[u8]], delta1: u32, delta2: u32) -> Result<SoftWeights> {
    if readouts.len() < 2 {
        return Err(Error::InvalidParameter(
            "soft information needs at least two readouts".into(),
        ));
    }
    if !(delta1 > delta2 && delta2 > 0) {
        return Err(Error::InvalidParameter(format!(
            "need delta1 > delta2 > 0, got {delta1} and {delta2}"
        )));
    }
    let n = readouts[0].len();
    if let Some(r) = readouts.iter().find(|r| r.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: r.len(),
        });
    }
    let delta = (0..n)
        .map(|i| {
            if readouts.iter().all(|r| r[i] == readouts[0][i]) {
                delta1
            } else {
                delta2
            }
        })
        .collect();
    Ok(SoftWeights {
        delta,
        delta1,
        delta2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    Cycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub position: usize,
    /// Syndrome weight after the flip.
    pub syndrome_weight: usize,
    /// Score of the flipped position, `WT(r + u_j) + Delta_j`.
    pub score: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub word: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
    pub syndrome_weight: usize,
    pub stop: StopReason,
    pub trace: Vec<TraceStep>,
}

/// Bitflip decoder bound to one parity-check matrix.
#[derive(Debug, Clone)]
pub struct BitflipDecoder {
    h: SparseBinaryMatrix,
    cols: Vec<Vec<usize>>,
    max_iters: usize,
    record_trace: bool,
    zobrist: Vec<u64>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl BitflipDecoder {
    /// Decoder with `max_iters = n`.
    pub fn new(h: SparseBinaryMatrix) -> Self {
        let n = h.n_cols();
        Self::with_max_iters(h, n.max(1))
    }

    pub fn with_max_iters(h: SparseBinaryMatrix, max_iters: usize) -> Self {
        let cols = h.columns();
        let zobrist = (0..h.n_cols() as u64).map(splitmix64).collect();
        BitflipDecoder {
            h,
            cols,
            max_iters: max_iters.max(1),
            record_trace: false,
            zobrist,
        }
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn matrix(&self) -> &SparseBinaryMatrix {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.n_cols()
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn syndrome_weight(&self, v: &[u8]) -> Result<usize> {
        Ok(bits::weight(&self.h.syndrome(v)?))
    }

    pub fn decode(&self, r: &[u8], soft: Option<&SoftWeights>) -> Result<DecodeResult> {
        let syn = self.h.syndrome(r)?;
        self.run(r.to_vec(), syn, soft)
    }

    /// Searches for a low-weight `e` with `H e^T = s` by bitflipping from the
    /// zero word. The returned `word` is the error estimate.
    pub fn decode_syndrome(&self, s: &[u8], soft: Option<&SoftWeights>) -> Result<DecodeResult> {
        if s.len() != self.h.n_rows() {
            return Err(Error::LengthMismatch {
                expected: self.h.n_rows(),
                actual: s.len(),
            });
        }
        self.run(vec![0; self.n()], s.to_vec(), soft)
    }

    /// Core loop: `syn` is the syndrome currently associated with `word`.
    fn run(&self, mut word: Vec<u8>, mut syn: Vec<u8>, soft: Option<&SoftWeights>) -> Result<DecodeResult> {
        let n = self.n();
        if let Some(s) = soft {
            if s.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: s.len(),
                });
            }
        }
        let delta = |i: usize| soft.map_or(0, |s| s.delta[i] as u64);

        let mut w = bits::weight(&syn);
        // unsat[i]: unsatisfied checks containing position i
        let mut unsat = vec![0usize; n];
        for (c, row) in self.h.rows().iter().enumerate() {
            if syn[c] == 1 {
                for &i in row {
                    unsat[i] += 1;
                }
            }
        }
        let mut state: u64 = word
            .iter()
            .zip(&self.zobrist)
            .filter(|(&b, _)| b == 1)
            .fold(0, |acc, (_, &z)| acc ^ z);
        let mut visited = HashSet::new();
        visited.insert(state);

        let mut trace = Vec::new();
        let mut iterations = 0;
        let stop = loop {
            if w == 0 {
                break StopReason::Converged;
            }
            if iterations == self.max_iters {
                break StopReason::MaxIterations;
            }
            // WT(r + u_i) = w + colweight(i) - 2 unsat(i)
            let mut best = (u64::MAX, 0usize);
            for i in 0..n {
                let score = (w + self.cols[i].len() - 2 * unsat[i]) as u64 + delta(i);
                if score < best.0 {
                    best = (score, i);
                }
            }
            let j = best.1;
            word[j] ^= 1;
            state ^= self.zobrist[j];
            for &c in &self.cols[j] {
                syn[c] ^= 1;
                if syn[c] == 1 {
                    w += 1;
                    for &i in self.h.row(c) {
                        unsat[i] += 1;
                    }
                } else {
                    w -= 1;
                    for &i in self.h.row(c) {
                        unsat[i] -= 1;
                    }
                }
            }
            iterations += 1;
            if self.record_trace {
                trace.push(TraceStep {
                    position: j,
                    syndrome_weight: w,
                    score: best.0,
                });
            }
            if w != 0 && !visited.insert(state) {
                break StopReason::Cycle;
            }
        };

        Ok(DecodeResult {
            word,
            converged: stop == StopReason::Converged,
            iterations,
            syndrome_weight: w,
            stop,
            trace,
        })
    }

    /// Soft weights from all readouts, then each readout decoded in order.
    ///
    /// The first converged result wins; otherwise the result with the smallest
    /// final syndrome weight (earliest on ties) is returned. A single readout
    /// is decoded with uniform weights.
    pub fn reproduce_multi(&self, readouts: &[&[u8]], delta1: u32, delta2: u32) -> Result<DecodeResult> {
        let Some(first) = readouts.first() else {
            return Err(Error::InvalidParameter("no readouts given".into()));
        };
        if readouts.len() == 1 {
            return self.decode(first, None);
        }
        let soft = derive_soft(readouts, delta1, delta2)?;
        if soft.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                actual: soft.len(),
            });
        }
        let mut best: Option<DecodeResult> = None;
        for r in readouts {
            let res = self.decode(r, Some(&soft))?;
            if res.converged {
                return Ok(res);
            }
            if best.as_ref().is_none_or(|b| res.syndrome_weight < b.syndrome_weight) {
                best = Some(res);
            }
        }
        Ok(best.expect("at least one readout"))
    }
}

pub fn syndrome_weight(h: &SparseBinaryMatrix, v: &[u8]) -> Result<usize> {
    Ok(bits::weight(&h.syndrome(v)?))
}

pub fn bitflip_decode(
    h: &SparseBinaryMatrix,
    r: &[u8],
    soft: Option<&SoftWeights>,
    max_iters: usize,
) -> Result<DecodeResult> {
    BitflipDecoder::with_max_iters(h.clone(), max_iters)
        .with_trace(true)
        .decode(r, soft)
}

pub fn reproduce_multi(
    h: &SparseBinaryMatrix,
    readouts: &[&[u8]],
    delta1: u32,
    delta2: u32,
    max_iters: usize,
) -> Result<DecodeResult> {
    BitflipDecoder::with_max_iters(h.clone(), max_iters).reproduce_multi(readouts, delta1, delta2)
}

//! Per-response LDPC codes for PUF error correction.
//!
//! An enrolled response `r_I` is turned into a codeword of an individually
//! constructed LDPC code: rows of finite-geometry and Reed-Solomon based
//! parity-check matrices are kept only when they are orthogonal to `r_I`,
//! then topped up with low-weight combinations and column-balancing rows.
//! Noisy readouts are corrected with a bitflip decoder that can use
//! agreement between several readouts as soft information.
//!
//! Module map:
//!
//! * [`gf`]: GF(p^s) arithmetic with exp/log tables.
//! * [`geometry`]: Euclidean and projective geometries and their incidence matrices.
//! * [`rs_construct`]: LDPC matrices from shortened Reed-Solomon codes.
//! * [`sparsemat`]: sparse GF(2) matrices, rank, regularity checks, file format.
//! * [`sketch`]: instance-code construction plus code-offset and syndrome sketches.
//! * [`decode`]: bitflip decoding with multi-readout soft weights.
//! * [`eval`]: BSC simulation, block error curves and memory accounting.

pub mod bits;
pub mod decode;
pub mod error;
pub mod eval;
pub mod gf;
pub mod geometry;
pub mod rs_construct;
pub mod sketch;
pub mod sparsemat;

pub use error::{Error, Result};

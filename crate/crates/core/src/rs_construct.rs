//! LDPC matrices from shortened Reed-Solomon codes.
//!
//! The RS code of length q-1 with generator `g(x) = (x - a)(x - a^2)...(x - a^(rho-2))`
//! is shortened to length `rho` and dimension 2; its q^2 codewords split into
//! q cosets of the one-dimensional subcode spanned by a full-weight codeword.
//! Each codeword becomes a binary row by replacing every symbol with its
//! length-q location vector.

use crate::gf::{Element, FieldTable};
use crate::sparsemat::SparseBinaryMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RsBase {
    pub field: FieldTable,
    pub rho: usize,
    /// Generator polynomial coefficients, low to high.
    pub generator: Vec<Element>,
    /// The full-weight codeword spanning the first coset.
    pub c: Vec<Element>,
    /// `q` cosets of `q` codewords each; `cosets[0]` is `{beta c}`.
    pub cosets: Vec<Vec<Vec<Element>>>,
}

impl RsBase {
    pub fn q(&self) -> usize {
        self.field.size() as usize
    }

    pub fn codewords(&self) -> impl Iterator<Item = &Vec<Element>> {
        self.cosets.iter().flatten()
    }
}

fn poly_mul(f: &FieldTable, a: &[Element], b: &[Element]) -> Vec<Element> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    out
}

pub fn build_base(q: u32, rho: usize) -> Result<RsBase> {
    let field = FieldTable::with_size(q)?;
    if rho < 2 || rho >= q as usize {
        return Err(Error::InvalidParameter(format!(
            "RS parameter rho must satisfy 1 < rho < q, got rho={rho}, q={q}"
        )));
    }
    let mut generator = vec![1];
    for i in 1..=(rho as u64 - 2) {
        generator = poly_mul(&field, &generator, &[field.neg(field.exp(i)), 1]);
    }
    debug_assert_eq!(generator.len(), rho - 1);

    // shortened code: (m0 + m1 x) g(x), of degree at most rho - 1
    let mut code: Vec<Vec<Element>> = Vec::with_capacity((q * q) as usize);
    for m1 in 0..q {
        for m0 in 0..q {
            let mut w = poly_mul(&field, &[m0, m1], &generator);
            w.resize(rho, 0);
            code.push(w);
        }
    }
    code.sort();

    let c = code
        .iter()
        .find(|w| w.iter().all(|&x| x != 0))
        .cloned()
        .ok_or_else(|| Error::Internal(format!("no weight-{rho} codeword in shortened RS code")))?;

    let mut assigned = std::collections::HashSet::new();
    let mut cosets = Vec::with_capacity(q as usize);
    for v in &code {
        if assigned.contains(v) {
            continue;
        }
        let mut coset: Vec<Vec<Element>> = (0..q)
            .map(|beta| {
                v.iter()
                    .zip(&c)
                    .map(|(&x, &y)| field.add(x, field.mul(beta, y)))
                    .collect()
            })
            .collect();
        coset.sort();
        for w in &coset {
            assigned.insert(w.clone());
        }
        cosets.push(coset);
    }
    // `code` is sorted, so cosets come out ordered by their smallest member
    if cosets.len() != q as usize {
        return Err(Error::Internal("coset partition has the wrong size".into()));
    }

    Ok(RsBase {
        field,
        rho,
        generator,
        c,
        cosets,
    })
}

/// Support of the location-vector expansion of a codeword.
pub fn z_expand(c: &[Element], field: &FieldTable) -> Result<Vec<usize>> {
    let q = field.size() as usize;
    c.iter()
        .enumerate()
        .map(|(j, &sym)| Ok(j * q + field.location(field.check(sym)?)))
        .collect()
}

/// Stacks the expansions of the first `gamma` cosets into a `(gamma q) x (rho q)` matrix.
pub fn build_rs_ldpc(base: &RsBase, gamma: usize) -> Result<SparseBinaryMatrix> {
    let q = base.q();
    if gamma == 0 || gamma > q {
        return Err(Error::InvalidParameter(format!(
            "gamma must satisfy 1 <= gamma <= {q}, got {gamma}"
        )));
    }
    let rows = base.cosets[..gamma]
        .iter()
        .flatten()
        .map(|w| z_expand(w, &base.field))
        .collect::<Result<Vec<_>>>()?;
    SparseBinaryMatrix::from_rows(base.rho * q, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::support_overlap;
    use crate::sparsemat::check_regular;
    use std::collections::HashSet;

    #[test]
    fn base_partition() {
        for (q, rho) in [(4, 3), (4, 2), (8, 5), (5, 4), (9, 3)] {
            let b = build_base(q, rho).unwrap();
            assert_eq!(b.cosets.len(), q as usize);
            let all: HashSet<_> = b.codewords().cloned().collect();
            assert_eq!(all.len(), (q * q) as usize, "cosets overlap for q={q}");
            assert!(b.cosets.iter().all(|c| c.len() == q as usize));
            assert!(b.c.iter().all(|&x| x != 0));
            let first: HashSet<_> = b.cosets[0].iter().cloned().collect();
            let scaled: HashSet<Vec<u32>> = (0..q)
                .map(|beta| b.c.iter().map(|&x| b.field.mul(beta, x)).collect())
                .collect();
            assert_eq!(first, scaled);
        }
    }

    #[test]
    fn minimum_distance_is_rho_minus_one() {
        let b = build_base(8, 5).unwrap();
        let words: Vec<_> = b.codewords().cloned().collect();
        let dmin = words
            .iter()
            .filter(|w| w.iter().any(|&x| x != 0))
            .map(|w| w.iter().filter(|&&x| x != 0).count())
            .min()
            .unwrap();
        assert_eq!(dmin, 4);
    }

    #[test]
    fn z_expand_examples() {
        let f = FieldTable::with_size(4).unwrap();
        assert_eq!(z_expand(&[0, 0, 0], &f).unwrap(), vec![0, 4, 8]);
        let alpha = f.primitive();
        assert_eq!(z_expand(&[1, alpha], &f).unwrap(), vec![1, 6]);
        assert!(z_expand(&[7], &f).is_err());
    }

    #[test]
    fn stacked_matrix_shape() {
        let b = build_base(4, 3).unwrap();
        let h = build_rs_ldpc(&b, 2).unwrap();
        assert_eq!((h.n_rows(), h.n_cols()), (8, 12));
        assert!(h.row_weights().iter().all(|&w| w == 3));
        assert!(h.col_weights().iter().all(|&w| w == 2));
        for i in 0..h.n_rows() {
            for j in i + 1..h.n_rows() {
                assert!(support_overlap(h.row(i), h.row(j)) <= 1);
            }
        }
        let a1 = build_rs_ldpc(&b, 1).unwrap();
        assert_eq!(a1.rows(), &h.rows()[..4]);
        assert!(build_rs_ldpc(&b, 0).is_err());
        assert!(build_rs_ldpc(&b, 5).is_err());
    }

    #[test]
    fn regular_for_small_fields() {
        for q in [3u32, 4, 5, 7, 8] {
            for rho in 2..q as usize {
                let b = build_base(q, rho).unwrap();
                for gamma in 1..=q as usize {
                    let h = build_rs_ldpc(&b, gamma).unwrap();
                    let r = check_regular(&h);
                    assert!(r.is_regular(), "q={q} rho={rho} gamma={gamma}: {:?}", r.violation());
                }
            }
        }
    }

    #[test]
    fn rejects_bad_rho() {
        assert!(build_base(4, 4).is_err());
        assert!(build_base(4, 1).is_err());
        assert!(build_base(6, 3).is_err());
    }
}

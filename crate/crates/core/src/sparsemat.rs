//! Sparse binary matrices in coordinate form.
//!
//! Each row is stored as a strictly increasing list of the column indices
//! holding a one. On disk a matrix is a header line `n_rows n_cols nnz`
//! followed by one zero-indexed `row col` pair per one, sorted by row then
//! column. Lines starting with `#` before the header are comments.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::bits;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseBinaryMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<usize>>,
}

impl SparseBinaryMatrix {
    /// Builds a matrix from row supports. Supports are sorted; repeated or
    /// out-of-range indices are rejected.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "row {r} repeats a column index"
                )));
            }
            if let Some(&c) = row.last() {
                if c >= n_cols {
                    return Err(Error::InvalidParameter(format!(
                        "row {r} has column {c} outside 0..{n_cols}"
                    )));
                }
            }
        }
        Ok(SparseBinaryMatrix {
            n_rows: rows.len(),
            n_cols,
            rows,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseBinaryMatrix {
            n_rows,
            n_cols,
            rows: vec![Vec::new(); n_rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseBinaryMatrix {
            n_rows: n,
            n_cols: n,
            rows: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn from_dense(dense: &[Vec<u8>]) -> Result<Self> {
        let n_cols = dense.first().map_or(0, Vec::len);
        if let Some(bad) = dense.iter().find(|r| r.len() != n_cols) {
            return Err(Error::LengthMismatch {
                expected: n_cols,
                actual: bad.len(),
            });
        }
        let rows = dense
            .iter()
            .map(|r| (0..n_cols).filter(|&j| r[j] != 0).collect())
            .collect();
        Self::from_rows(n_cols, rows)
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|row| {
                let mut d = vec![0u8; self.n_cols];
                for &j in row {
                    d[j] = 1;
                }
                d
            })
            .collect()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        if self.n_rows == 0 || self.n_cols == 0 {
            return 0.0;
        }
        self.nnz() as f64 / (self.n_rows as f64 * self.n_cols as f64)
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.n_cols];
        for row in &self.rows {
            for &j in row {
                w[j] += 1;
            }
        }
        w
    }

    /// Column adjacency: for each column, the rows holding a one there.
    pub fn columns(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.n_cols];
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                cols[j].push(i);
            }
        }
        cols
    }

    pub fn transpose(&self) -> Self {
        SparseBinaryMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            rows: self.columns(),
        }
    }

    /// Removes repeated rows, keeping first occurrences in order.
    pub fn dedup_rows(&self) -> Self {
        let mut seen = HashSet::new();
        let rows: Vec<_> = self
            .rows
            .iter()
            .filter(|r| seen.insert((*r).clone()))
            .cloned()
            .collect();
        SparseBinaryMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            rows,
        }
    }

    /// Relabels columns: column `j` moves to `perm[j]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_cols {
            return Err(Error::LengthMismatch {
                expected: self.n_cols,
                actual: perm.len(),
            });
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&j| perm[j]).collect())
            .collect();
        Self::from_rows(self.n_cols, rows)
    }

    /// `H v^T` over GF(2).
    pub fn syndrome(&self, v: &[u8]) -> Result<Vec<u8>> {
        self.check_len(v)?;
        Ok(self
            .rows
            .iter()
            .map(|row| bits::support_parity(row, v))
            .collect())
    }

    pub fn is_codeword(&self, v: &[u8]) -> Result<bool> {
        self.check_len(v)?;
        Ok(self.rows.iter().all(|row| bits::support_parity(row, v) == 0))
    }

    fn check_len(&self, v: &[u8]) -> Result<()> {
        if v.len() != self.n_cols {
            return Err(Error::LengthMismatch {
                expected: self.n_cols,
                actual: v.len(),
            });
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        rank_gf2(self)
    }

    pub fn stats(&self) -> MatrixStats {
        MatrixStats::of(self)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                writeln!(w, "{i} {j}")?;
            }
        }
        Ok(())
    }

    /// Reads the coordinate format. Leading `#` comment lines are skipped.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (header_no, header) = loop {
            match lines.next() {
                None => {
                    return Err(Error::Parse {
                        line: 0,
                        msg: "missing header".into(),
                    })
                }
                Some((no, line)) => {
                    let line = line?;
                    let t = line.trim();
                    if t.is_empty() || t.starts_with('#') {
                        continue;
                    }
                    break (no + 1, line);
                }
            }
        };
        let fields = parse_ints(&header, header_no)?;
        let [n_rows, n_cols, nnz] = fields[..] else {
            return Err(Error::Parse {
                line: header_no,
                msg: "header must be `n_rows n_cols nnz`".into(),
            });
        };
        let mut rows = vec![Vec::new(); n_rows];
        let mut count = 0;
        let mut last: Option<(usize, usize)> = None;
        for (no, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let no = no + 1;
            let pair = parse_ints(&line, no)?;
            let [i, j] = pair[..] else {
                return Err(Error::Parse {
                    line: no,
                    msg: "expected `row col`".into(),
                });
            };
            if i >= n_rows || j >= n_cols {
                return Err(Error::Parse {
                    line: no,
                    msg: format!("entry ({i}, {j}) outside {n_rows}x{n_cols}"),
                });
            }
            if last.is_some_and(|l| l >= (i, j)) {
                return Err(Error::Parse {
                    line: no,
                    msg: "entries must be strictly sorted by (row, col)".into(),
                });
            }
            last = Some((i, j));
            rows[i].push(j);
            count += 1;
        }
        if count != nnz {
            return Err(Error::Parse {
                line: header_no,
                msg: format!("header announces {nnz} entries, found {count}"),
            });
        }
        Ok(SparseBinaryMatrix {
            n_rows,
            n_cols,
            rows,
        })
    }
}

fn parse_ints(line: &str, no: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|e| Error::Parse {
                line: no,
                msg: format!("`{t}`: {e}"),
            })
        })
        .collect()
}

pub fn write_matrix(m: &SparseBinaryMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    m.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SparseBinaryMatrix> {
    SparseBinaryMatrix::read_from(BufReader::new(std::fs::File::open(path)?))
}

/// Incrementally maintained GF(2) row basis.
///
/// Basis vectors are keyed by their lowest set bit, so reduction only ever
/// touches bits above the current pivot.
#[derive(Debug, Clone)]
pub struct Gf2Basis {
    n_cols: usize,
    words: usize,
    vectors: Vec<Vec<u64>>,
    pivot_of: Vec<Option<usize>>,
}

impl Gf2Basis {
    pub fn new(n_cols: usize) -> Self {
        Gf2Basis {
            n_cols,
            words: n_cols.div_ceil(64),
            vectors: Vec::new(),
            pivot_of: vec![None; n_cols],
        }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn packed(&self, support: &[usize]) -> Vec<u64> {
        let mut v = vec![0u64; self.words];
        for &j in support {
            v[j / 64] ^= 1 << (j % 64);
        }
        v
    }

    /// Reduces `v` against the basis; returns the pivot of the remainder if nonzero.
    fn reduce(&self, v: &mut [u64]) -> Option<usize> {
        let mut w = 0;
        while w < v.len() {
            if v[w] == 0 {
                w += 1;
                continue;
            }
            let bit = w * 64 + v[w].trailing_zeros() as usize;
            match self.pivot_of[bit] {
                Some(idx) => {
                    for (a, b) in v[w..].iter_mut().zip(&self.vectors[idx][w..]) {
                        *a ^= b;
                    }
                }
                None => return Some(bit),
            }
        }
        None
    }

    pub fn contains(&self, support: &[usize]) -> bool {
        let mut v = self.packed(support);
        self.reduce(&mut v).is_none()
    }

    /// Adds the row if it is independent of the basis; returns whether it was.
    pub fn insert(&mut self, support: &[usize]) -> bool {
        let mut v = self.packed(support);
        match self.reduce(&mut v) {
            None => false,
            Some(pivot) => {
                self.pivot_of[pivot] = Some(self.vectors.len());
                self.vectors.push(v);
                true
            }
        }
    }
}

/// GF(2) rank by dense bit-packed elimination.
pub fn rank_gf2(m: &SparseBinaryMatrix) -> usize {
    let mut basis = Gf2Basis::new(m.n_cols());
    for row in m.rows() {
        basis.insert(row);
        if basis.rank() == m.n_cols() {
            break;
        }
    }
    basis.rank()
}

/// Basis of the right kernel `{x : H x^T = 0}` as dense vectors.
pub fn nullspace_basis(m: &SparseBinaryMatrix) -> Vec<Vec<u8>> {
    let n = m.n_cols();
    let words = n.div_ceil(64);
    // reduced row echelon form over packed rows
    let mut rows: Vec<Vec<u64>> = m
        .rows()
        .iter()
        .map(|r| {
            let mut v = vec![0u64; words];
            for &j in r {
                v[j / 64] ^= 1 << (j % 64);
            }
            v
        })
        .collect();
    let get = |v: &[u64], j: usize| (v[j / 64] >> (j % 64)) & 1 == 1;
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(sel) = (r..rows.len()).find(|&i| get(&rows[i], col)) else {
            continue;
        };
        rows.swap(r, sel);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && get(row, col) {
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a ^= b;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    let pivot_set: HashSet<usize> = pivots.iter().copied().collect();
    (0..n)
        .filter(|c| !pivot_set.contains(c))
        .map(|free| {
            let mut x = vec![0u8; n];
            x[free] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                if get(&rows[i], free) {
                    x[pc] = 1;
                }
            }
            x
        })
        .collect()
}

/// Outcome of the LDPC regularity check. `None` fields mean the property holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularityReport {
    /// Common row weight, if all rows have the same weight.
    pub row_weight: Option<usize>,
    /// Common column weight, if all columns have the same weight.
    pub col_weight: Option<usize>,
    /// Two rows sharing more than one column.
    pub row_overlap: Option<(usize, usize)>,
    /// Two columns sharing more than one row.
    pub col_overlap: Option<(usize, usize)>,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.row_weight.is_some()
            && self.col_weight.is_some()
            && self.row_overlap.is_none()
            && self.col_overlap.is_none()
    }

    /// All violated properties, `; `-separated.
    pub fn violation(&self) -> Option<String> {
        let mut out = Vec::new();
        if self.row_weight.is_none() {
            out.push("row weights are not constant".to_string());
        }
        if self.col_weight.is_none() {
            out.push("column weights are not constant".to_string());
        }
        if let Some((a, b)) = self.row_overlap {
            out.push(format!("rows {a} and {b} share more than one position"));
        }
        if let Some((a, b)) = self.col_overlap {
            out.push(format!("columns {a} and {b} share more than one row"));
        }
        (!out.is_empty()).then(|| out.join("; "))
    }
}

fn constant(ws: &[usize]) -> Option<usize> {
    match ws.first() {
        None => Some(0),
        Some(&w) => ws.iter().all(|&x| x == w).then_some(w),
    }
}

/// First pair (in lexicographic order) of lists that share two or more members.
fn overlap_witness(lists: &[Vec<usize>], n_other: usize) -> Option<(usize, usize)> {
    let mut incidence = vec![Vec::new(); n_other];
    for (i, l) in lists.iter().enumerate() {
        for &x in l {
            incidence[x].push(i);
        }
    }
    let mut best: Option<(usize, usize)> = None;
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for inc in &incidence {
        for (a_pos, &a) in inc.iter().enumerate() {
            for &b in &inc[a_pos + 1..] {
                if !seen.insert((a, b)) {
                    best = Some(best.map_or((a, b), |cur| cur.min((a, b))));
                }
            }
        }
    }
    best
}

pub fn check_regular(m: &SparseBinaryMatrix) -> RegularityReport {
    RegularityReport {
        row_weight: constant(&m.row_weights()),
        col_weight: constant(&m.col_weights()),
        row_overlap: overlap_witness(m.rows(), m.n_cols()),
        col_overlap: overlap_witness(&m.columns(), m.n_rows()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixStats {
    pub n_rows: usize,
    pub n_cols: usize,
    pub nnz: usize,
    pub density: f64,
    /// weight -> number of rows with that weight
    pub row_weights: BTreeMap<usize, usize>,
    /// weight -> number of columns with that weight
    pub col_weights: BTreeMap<usize, usize>,
    pub rank: usize,
    /// `1 - gamma/rho` when row and column weights are constant.
    pub rate_bound: Option<f64>,
}

impl MatrixStats {
    pub fn of(m: &SparseBinaryMatrix) -> Self {
        let hist = |ws: Vec<usize>| {
            let mut h = BTreeMap::new();
            for w in ws {
                *h.entry(w).or_insert(0) += 1;
            }
            h
        };
        let rw = m.row_weights();
        let cw = m.col_weights();
        let rate_bound = match (constant(&rw), constant(&cw)) {
            (Some(rho), Some(gamma)) if rho > 0 => Some(1.0 - gamma as f64 / rho as f64),
            _ => None,
        };
        MatrixStats {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            nnz: m.nnz(),
            density: m.density(),
            row_weights: hist(rw),
            col_weights: hist(cw),
            rank: rank_gf2(m),
            rate_bound,
        }
    }

    pub fn col_weight_spread(&self) -> usize {
        match (self.col_weights.keys().next(), self.col_weights.keys().last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0,
        }
    }
}

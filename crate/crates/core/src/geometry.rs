//! Euclidean geometries EG(m, q) and projective geometries PG(m, q).
//!
//! EG points are the elements of GF(q^m), origin included, and a point's
//! index is its field encoding. Lines through the origin are the sets
//! `{lambda a : lambda in GF(q)}`; every other line is a translate `b + L`.
//!
//! PG points are nonzero (m+1)-tuples over GF(q) up to scaling, represented
//! by the tuple whose first nonzero coordinate is one. The line through two
//! points `a`, `b` is `{x a + y b : (x, y) != (0, 0)}` reduced to classes.

use std::collections::HashSet;

use crate::gf::{prime_power, Element, FieldTable};
use crate::sparsemat::SparseBinaryMatrix;
use crate::{Error, Result};

const MAX_POINTS: u64 = 1 << 16;
const MAX_PG_POINTS: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Euclidean,
    Projective,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Point {
    /// A field element of GF(q^m), by encoding.
    Affine(Element),
    /// Normalized homogeneous coordinates over GF(q).
    Projective(Vec<Element>),
}

#[derive(Debug, Clone)]
pub struct Geometry {
    pub kind: GeometryKind,
    pub m: u32,
    pub q: u32,
    pub points: Vec<Point>,
    /// Each line as a sorted list of point indices.
    pub lines: Vec<Vec<usize>>,
    /// Points per line.
    pub rho: usize,
    /// Lines per point.
    pub gamma: usize,
}

impl Geometry {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    /// Rows are lines, columns are points.
    pub fn incidence_matrix(&self) -> SparseBinaryMatrix {
        SparseBinaryMatrix::from_rows(self.n_points(), self.lines.clone())
            .expect("geometry lines are valid point sets")
    }
}

pub fn incidence_matrix(g: &Geometry) -> SparseBinaryMatrix {
    g.incidence_matrix()
}

/// Closed-form `(n_points, rho, n_lines, gamma)` for EG(m, q).
pub fn eg_counts(m: u32, q: u64) -> (u64, u64, u64, u64) {
    let qm = q.pow(m);
    let gamma = (qm - 1) / (q - 1);
    (qm, q, q.pow(m - 1) * (qm - 1) / (q - 1), gamma)
}

/// Closed-form `(n_points, rho, n_lines, gamma)` for PG(m, q).
pub fn pg_counts(m: u32, q: u64) -> (u64, u64, u64, u64) {
    let n = (q.pow(m + 1) - 1) / (q - 1);
    let lines = (q.pow(m + 1) - 1) * (q.pow(m) - 1) / ((q - 1) * (q - 1) * (q + 1));
    (n, q + 1, lines, (q.pow(m) - 1) / (q - 1))
}

fn validate(m: u32, q: u32) -> Result<(u32, u32)> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "geometry dimension must be at least 2, got {m}"
        )));
    }
    prime_power(q).ok_or(Error::NotPrimePower(q))
}

pub fn build_eg(m: u32, q: u32) -> Result<Geometry> {
    let (p, s) = validate(m, q)?;
    let n_points = (q as u64)
        .checked_pow(m)
        .filter(|&n| n <= MAX_POINTS)
        .ok_or_else(|| Error::TooLarge {
            what: format!("EG({m},{q})"),
            limit: MAX_POINTS,
        })?;
    let field = FieldTable::new(p, s * m)?;
    let scalars = field.subfield(s)?;
    let n_dirs = (n_points - 1) / (q as u64 - 1);

    // alpha^j F_q^* for j < n_dirs are exactly the cosets of F_q^* in GF(q^m)^*
    let origin_lines: Vec<Vec<Element>> = (0..n_dirs)
        .map(|j| {
            let dir = field.exp(j);
            let mut line: Vec<Element> = scalars.iter().map(|&l| field.mul(l, dir)).collect();
            line.sort_unstable();
            line
        })
        .collect();

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut lines: Vec<Vec<usize>> = Vec::new();
    for line in &origin_lines {
        let idx: Vec<usize> = line.iter().map(|&e| e as usize).collect();
        seen.insert(idx.clone());
        lines.push(idx);
    }
    for line in &origin_lines {
        for b in 1..n_points as Element {
            if line.contains(&b) {
                continue;
            }
            let mut shifted: Vec<usize> = line.iter().map(|&e| field.add(b, e) as usize).collect();
            shifted.sort_unstable();
            if seen.insert(shifted.clone()) {
                lines.push(shifted);
            }
        }
    }

    Ok(Geometry {
        kind: GeometryKind::Euclidean,
        m,
        q,
        points: (0..n_points as Element).map(Point::Affine).collect(),
        lines,
        rho: q as usize,
        gamma: n_dirs as usize,
    })
}

pub fn build_pg(m: u32, q: u32) -> Result<Geometry> {
    let (p, s) = validate(m, q)?;
    let field = FieldTable::new(p, s)?;
    let dim = m as usize + 1;
    let n_points = (q as u64)
        .checked_pow(m + 1)
        .map(|t| (t - 1) / (q as u64 - 1))
        .filter(|&n| n <= MAX_PG_POINTS)
        .ok_or_else(|| Error::TooLarge {
            what: format!("PG({m},{q})"),
            limit: MAX_PG_POINTS,
        })? as usize;

    let total = (q as usize).pow(m + 1);
    let code = |t: &[Element]| t.iter().fold(0usize, |acc, &c| acc * q as usize + c as usize);
    let mut index_of = vec![usize::MAX; total];
    let mut points: Vec<Vec<Element>> = Vec::with_capacity(n_points);
    for c in 1..total {
        let mut t = vec![0; dim];
        let mut rest = c;
        for slot in t.iter_mut().rev() {
            *slot = (rest % q as usize) as Element;
            rest /= q as usize;
        }
        if t.iter().find(|&&x| x != 0) == Some(&1) {
            index_of[c] = points.len();
            points.push(t);
        }
    }
    debug_assert_eq!(points.len(), n_points);

    let normalize = |t: &mut [Element]| {
        if let Some(&lead) = t.iter().find(|&&x| x != 0) {
            let inv = field.inv(lead).expect("nonzero");
            for x in t.iter_mut() {
                *x = field.mul(*x, inv);
            }
        }
    };

    let words = n_points.div_ceil(64);
    let mut covered = vec![0u64; n_points * words];
    let mut lines = Vec::new();
    for a in 0..n_points {
        for b in a + 1..n_points {
            if covered[a * words + b / 64] >> (b % 64) & 1 == 1 {
                continue;
            }
            // the class of b plus the classes of a + y b for all y
            let mut line = vec![b];
            for y in 0..q {
                let mut t: Vec<Element> = points[a]
                    .iter()
                    .zip(&points[b])
                    .map(|(&u, &v)| field.add(u, field.mul(y, v)))
                    .collect();
                normalize(&mut t);
                line.push(index_of[code(&t)]);
            }
            line.sort_unstable();
            for &u in &line {
                for &v in &line {
                    covered[u * words + v / 64] |= 1 << (v % 64);
                }
            }
            lines.push(line);
        }
    }

    Ok(Geometry {
        kind: GeometryKind::Projective,
        m,
        q,
        points: points.into_iter().map(Point::Projective).collect(),
        lines,
        rho: q as usize + 1,
        gamma: ((q as u64).pow(m) - 1) as usize / (q as usize - 1),
    })
}

//! Arithmetic in GF(q), q = p^s, backed by exp/log tables.
//!
//! Elements are encoded as integers `0..q`: the base-p digits of the
//! encoding are the polynomial coefficients (digit `i` multiplies `x^i`).
//! For p = 2 this is the usual bit packing.

use crate::{Error, Result};

pub type Element = u32;

const MAX_FIELD_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldTable {
    p: u32,
    s: u32,
    q: u32,
    /// Monic modulus, coefficients from x^0 up to x^s.
    modulus: Vec<u32>,
    primitive: Element,
    exp: Vec<Element>,
    log: Vec<u32>,
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits a prime power `q = p^s` into `(p, s)`.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut s = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        s += 1;
    }
    (rest == 1).then_some((p, s))
}

fn digits(mut a: u32, p: u32, len: usize) -> Vec<u32> {
    let mut d = vec![0; len];
    for slot in d.iter_mut() {
        *slot = a % p;
        a /= p;
    }
    d
}

fn undigits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Remainder of `a` modulo a monic polynomial `m` over GF(p). Coefficients low to high.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let deg_m = m.len() - 1;
    let mut r = a.to_vec();
    while r.len() > deg_m {
        let lead = r.pop().unwrap();
        if lead != 0 {
            let shift = r.len() - deg_m;
            for (i, &c) in m[..deg_m].iter().enumerate() {
                r[shift + i] = (r[shift + i] + (p - c) * lead % p) % p;
            }
        }
    }
    r
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

/// Monic irreducibility test by trial division with every monic polynomial of
/// degree 1..=deg/2.
fn is_irreducible(m: &[u32], p: u32) -> bool {
    let deg = m.len() - 1;
    for d in 1..=deg / 2 {
        for low in 0..p.pow(d as u32) {
            let mut divisor = digits(low, p, d);
            divisor.push(1);
            if poly_rem(m, &divisor, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

impl FieldTable {
    /// Builds GF(p^s) with the lexicographically smallest monic irreducible
    /// modulus and the smallest primitive element.
    pub fn new(p: u32, s: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if s == 0 {
            return Err(Error::InvalidParameter("field degree must be at least 1".into()));
        }
        let q = (p as u64)
            .checked_pow(s)
            .filter(|&q| q <= MAX_FIELD_SIZE)
            .ok_or_else(|| Error::TooLarge {
                what: format!("GF({p}^{s})"),
                limit: MAX_FIELD_SIZE,
            })? as u32;
        let s_us = s as usize;

        let modulus = (0..q)
            .map(|low| {
                let mut m = digits(low, p, s_us);
                m.push(1);
                m
            })
            .find(|m| is_irreducible(m, p))
            .ok_or_else(|| Error::Internal(format!("no irreducible of degree {s} over GF({p})")))?;

        let slow_mul = |a: u32, b: u32| -> u32 {
            let prod = poly_mul(&digits(a, p, s_us), &digits(b, p, s_us), p);
            undigits(&poly_rem(&prod, &modulus, p), p)
        };
        let slow_pow = |a: u32, mut e: u32| -> u32 {
            let (mut base, mut acc) = (a, 1u32);
            while e > 0 {
                if e & 1 == 1 {
                    acc = slow_mul(acc, base);
                }
                base = slow_mul(base, base);
                e >>= 1;
            }
            acc
        };

        let order = q - 1;
        let factors = prime_factors(order);
        let primitive = (1..q)
            .find(|&g| factors.iter().all(|&f| slow_pow(g, order / f) != 1))
            .ok_or_else(|| Error::Internal(format!("GF({q}) has no primitive element")))?;

        let mut exp = Vec::with_capacity(order as usize);
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..order {
            exp.push(x);
            log[x as usize] = i;
            x = slow_mul(x, primitive);
        }
        if x != 1 {
            return Err(Error::Internal("exp table did not close".into()));
        }

        Ok(FieldTable {
            p,
            s,
            q,
            modulus,
            primitive,
            exp,
            log,
        })
    }

    /// Builds GF(q) for a prime power `q`.
    pub fn with_size(q: u32) -> Result<Self> {
        let (p, s) = prime_power(q).ok_or(Error::NotPrimePower(q))?;
        Self::new(p, s)
    }

    pub fn size(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.s
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn primitive(&self) -> Element {
        self.primitive
    }

    pub fn exp_table(&self) -> &[Element] {
        &self.exp
    }

    pub fn check(&self, a: Element) -> Result<Element> {
        if a < self.q {
            Ok(a)
        } else {
            Err(Error::ElementOutOfRange {
                element: a,
                q: self.q,
            })
        }
    }

    /// `alpha^i` for any exponent.
    pub fn exp(&self, i: u64) -> Element {
        self.exp[(i % (self.q as u64 - 1)) as usize]
    }

    /// Discrete log base the primitive element. `None` for zero.
    pub fn log(&self, a: Element) -> Option<u32> {
        (a != 0).then(|| self.log[a as usize])
    }

    pub fn add(&self, a: Element, b: Element) -> Element {
        if self.p == 2 {
            return a ^ b;
        }
        let (mut a, mut b) = (a, b);
        let (mut out, mut place) = (0, 1);
        for _ in 0..self.s {
            out += ((a % self.p + b % self.p) % self.p) * place;
            a /= self.p;
            b /= self.p;
            place *= self.p;
        }
        out
    }

    pub fn neg(&self, a: Element) -> Element {
        if self.p == 2 {
            return a;
        }
        let mut a = a;
        let (mut out, mut place) = (0, 1);
        for _ in 0..self.s {
            out += ((self.p - a % self.p) % self.p) * place;
            a /= self.p;
            place *= self.p;
        }
        out
    }

    pub fn sub(&self, a: Element, b: Element) -> Element {
        self.add(a, self.neg(b))
    }

    /// Table multiplication; panics in debug builds on out-of-range input.
    pub fn mul(&self, a: Element, b: Element) -> Element {
        debug_assert!(a < self.q && b < self.q);
        if a == 0 || b == 0 {
            return 0;
        }
        let e = self.log[a as usize] as u64 + self.log[b as usize] as u64;
        self.exp(e)
    }

    /// Checked multiplication.
    pub fn try_mul(&self, a: Element, b: Element) -> Result<Element> {
        Ok(self.mul(self.check(a)?, self.check(b)?))
    }

    pub fn inv(&self, a: Element) -> Result<Element> {
        self.check(a)?;
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let order = self.q as u64 - 1;
        Ok(self.exp(order - self.log[a as usize] as u64))
    }

    pub fn pow(&self, a: Element, e: u64) -> Element {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        self.exp(self.log[a as usize] as u64 * e)
    }

    /// Elements of the subfield GF(p^d), `d | s`: zero followed by
    /// `alpha^(k (q-1)/(p^d-1))` for increasing `k`.
    pub fn subfield(&self, d: u32) -> Result<Vec<Element>> {
        if d == 0 || !self.s.is_multiple_of(d) {
            return Err(Error::InvalidParameter(format!(
                "GF({}^{d}) is not a subfield of GF({})",
                self.p, self.q
            )));
        }
        let sub_order = self.p.pow(d) as u64 - 1;
        let step = (self.q as u64 - 1) / sub_order;
        let mut out = vec![0];
        out.extend((0..sub_order).map(|k| self.exp(k * step)));
        Ok(out)
    }

    /// Position of an element in the order (0, alpha^0, alpha^1, ..., alpha^(q-2)).
    pub fn location(&self, a: Element) -> usize {
        match self.log(a) {
            None => 0,
            Some(l) => l as usize + 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // x^2 + x + 1 encodes as 0b111; x is 2, x+1 is 3.
    #[test]
    fn gf4_matches_hand_arithmetic() {
        let f = FieldTable::new(2, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        assert_eq!(f.mul(2, 1), 2);
        assert_eq!(f.mul(2, 2), 3);
        assert_eq!(f.inv(2).unwrap(), 3);
        assert_eq!(f.inv(1).unwrap(), 1);
        assert_eq!(f.try_mul(2, 0).unwrap(), 0);
    }

    #[test]
    fn small_prime_fields() {
        let f = FieldTable::new(2, 1).unwrap();
        assert_eq!(f.exp_table(), &[1]);
        let f = FieldTable::new(3, 1).unwrap();
        assert_eq!(f.primitive(), 2);
        assert_eq!(f.exp_table(), &[1, 2]);
        assert_eq!(f.mul(2, 2), 1);
        assert_eq!(f.inv(2).unwrap(), 2);
    }

    #[test]
    fn gf4_modulus_is_only_irreducible_quadratic() {
        // brute force: a monic quadratic over GF(2) is irreducible iff it has no root
        let irreducible: Vec<u32> = (0..4)
            .filter(|&low| {
                let (c0, c1) = (low & 1, (low >> 1) & 1);
                (0..2).all(|x| (x * x + c1 * x + c0) % 2 != 0)
            })
            .collect();
        assert_eq!(irreducible, vec![3]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(FieldTable::new(4, 1), Err(Error::NotPrime(4))));
        assert!(matches!(FieldTable::new(2, 17), Err(Error::TooLarge { .. })));
        assert!(FieldTable::new(2, 0).is_err());
        assert!(matches!(FieldTable::with_size(6), Err(Error::NotPrimePower(6))));
        let f = FieldTable::new(2, 2).unwrap();
        assert!(matches!(f.inv(0), Err(Error::ZeroInverse)));
        assert!(matches!(f.try_mul(4, 1), Err(Error::ElementOutOfRange { .. })));
    }

    #[test]
    fn deterministic_choice() {
        let f = FieldTable::new(2, 3).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 0, 1]);
        assert_eq!(f, FieldTable::new(2, 3).unwrap());
        let f = FieldTable::new(3, 2).unwrap();
        // x^2 + 1 is irreducible over GF(3) and sorts first
        assert_eq!(f.modulus(), &[1, 0, 1]);
    }

    #[test]
    fn lagrange_and_log_inverse() {
        for q in [2u32, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32, 49, 64, 81, 121, 128, 243, 256] {
            let f = FieldTable::with_size(q).unwrap();
            let mut seen = std::collections::HashSet::new();
            for (i, &e) in f.exp_table().iter().enumerate() {
                assert!(seen.insert(e));
                assert_eq!(f.log(e), Some(i as u32));
            }
            assert_eq!(seen.len(), q as usize - 1);
            for a in 1..q {
                assert_eq!(f.pow(a, q as u64 - 1), 1, "GF({q}) a={a}");
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in [2u32, 3, 4, 5, 7, 8, 9, 11, 13, 16] {
            let f = FieldTable::with_size(q).unwrap();
            for a in 0..q {
                assert_eq!(f.add(a, f.neg(a)), 0);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.mul(a, 0), 0);
                for b in 0..q {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn subfield_is_closed() {
        let f = FieldTable::new(2, 4).unwrap();
        let sub = f.subfield(2).unwrap();
        assert_eq!(sub.len(), 4);
        for &a in &sub {
            for &b in &sub {
                assert!(sub.contains(&f.add(a, b)));
                assert!(sub.contains(&f.mul(a, b)));
            }
        }
        assert!(f.subfield(3).is_err());
    }

    #[test]
    fn location_order() {
        let f = FieldTable::new(2, 2).unwrap();
        assert_eq!(f.location(0), 0);
        assert_eq!(f.location(1), 1);
        assert_eq!(f.location(f.primitive()), 2);
    }
}

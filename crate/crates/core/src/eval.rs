//! BSC simulation, block error curves and memory accounting.
//!
//! Every trial draws from its own ChaCha stream, selected from
//! `(seed, p index, weight, trial)`, so results do not depend on how rayon
//! schedules the work.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decode::BitflipDecoder;
use crate::sketch::{HelperData, HelperKind, Response};
use crate::sparsemat::SparseBinaryMatrix;
use crate::{Error, Result};

pub const DEFAULT_TRIALS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub p: f64,
    pub m: usize,
    pub seed: u64,
}

impl ChannelParams {
    pub fn new(p: f64, m: usize, seed: u64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::InvalidParameter(format!("crossover probability {p} outside [0, 0.5]")));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one readout".into()));
        }
        Ok(ChannelParams { p, m, seed })
    }
}

/// Soft-weight settings for multi-readout decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deltas {
    pub delta1: u32,
    pub delta2: u32,
}

impl Deltas {
    pub const N128: Deltas = Deltas { delta1: 10, delta2: 6 };
    pub const N256: Deltas = Deltas { delta1: 20, delta2: 12 };

    /// The reference setting for a code length: the n=256 pair from 256 up.
    pub fn for_length(n: usize) -> Self {
        if n >= 256 {
            Self::N256
        } else {
            Self::N128
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn stream_id(p_index: usize, weight: usize, trial: usize) -> u64 {
    ((p_index as u64) << 56) ^ ((weight as u64) << 36) ^ trial as u64
}

fn flip_bsc<R: Rng + ?Sized>(r: &[u8], p: f64, rng: &mut R) -> Vec<u8> {
    r.iter().map(|&b| if rng.gen_bool(p) { b ^ 1 } else { b }).collect()
}

/// `m` independent BSC(p) copies of `r_i`.
pub fn bsc_corrupt<R: Rng + ?Sized>(r_i: &Response, params: &ChannelParams, rng: &mut R) -> Vec<Response> {
    (0..params.m)
        .map(|_| Response::new(flip_bsc(r_i.bits(), params.p, rng)).expect("flips keep bits binary"))
        .collect()
}

/// `P(i) = C(n, i) p^i (1-p)^(n-i)` for all `i` in `0..=n`.
///
/// The mode term is evaluated in log space and the rest by the ratio
/// recurrence outward from it, which keeps the sum within a few ulps of one.
pub fn binomial_pmf_all(n: usize, p: f64) -> Vec<f64> {
    if p == 0.0 || p == 1.0 {
        let hit = if p == 0.0 { 0 } else { n };
        return (0..=n).map(|i| if i == hit { 1.0 } else { 0.0 }).collect();
    }
    let q = 1.0 - p;
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    let ln_choose: f64 = (0..mode).map(|j| ((n - j) as f64 / (j + 1) as f64).ln()).sum();
    let mut pmf = vec![0.0; n + 1];
    pmf[mode] = (ln_choose + mode as f64 * p.ln() + (n - mode) as f64 * (-p).ln_1p()).exp();
    let odds = p / q;
    for i in mode..n {
        pmf[i + 1] = pmf[i] * ((n - i) as f64 / (i + 1) as f64) * odds;
    }
    for i in (1..=mode).rev() {
        pmf[i - 1] = pmf[i] * (i as f64 / (n - i + 1) as f64) / odds;
    }
    pmf
}

pub fn binomial_pmf(n: usize, i: usize, p: f64) -> f64 {
    if i > n {
        return 0.0;
    }
    binomial_pmf_all(n, p)[i]
}

pub fn binomial_coefficient(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n.checked_sub(k)?);
    let mut c: u128 = 1;
    for j in 0..k {
        c = c.checked_mul((n - j) as u128)? / (j as u128 + 1);
    }
    Some(c)
}

/// Failure count for one error weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEstimate {
    /// Crossover of the extra readouts; `None` for single-readout runs.
    pub p: Option<f64>,
    pub weight: usize,
    pub trials: usize,
    pub failures: usize,
    pub exhaustive: bool,
}

impl WeightEstimate {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        let r = self.rate();
        (r * (1.0 - r) / self.trials.max(1) as f64).sqrt()
    }
}

/// The `index`-th weight-`i` subset of `0..n` in colex order.
fn unrank_combination(mut index: u128, n: usize, i: usize) -> Vec<usize> {
    let mut out = vec![0; i];
    let mut k = i;
    let mut top = n;
    while k > 0 {
        let mut c = top - 1;
        while binomial_coefficient(c, k).unwrap_or(0) > index {
            c -= 1;
        }
        index -= binomial_coefficient(c, k).unwrap_or(0);
        out[k - 1] = c;
        top = c;
        k -= 1;
    }
    out
}

fn decode_ok(decoder: &BitflipDecoder, r_i: &[u8], readouts: &[Vec<u8>], deltas: Deltas) -> Result<bool> {
    let refs: Vec<&[u8]> = readouts.iter().map(Vec::as_slice).collect();
    let res = decoder.reproduce_multi(&refs, deltas.delta1, deltas.delta2)?;
    Ok(res.converged && res.word == r_i)
}

/// Failure rate of decoding `r_i + e` over weight-`weight` error patterns.
///
/// Patterns are enumerated when there are at most `trials` of them and drawn
/// uniformly otherwise. With `channel.m > 1` the remaining readouts are
/// independent BSC(`channel.p`) copies of `r_i`.
pub fn estimate_perr(
    decoder: &BitflipDecoder,
    r_i: &Response,
    weight: usize,
    trials: usize,
    channel: &ChannelParams,
    deltas: Deltas,
) -> Result<WeightEstimate> {
    estimate_perr_indexed(decoder, r_i, weight, trials, channel, deltas, 0)
}

fn estimate_perr_indexed(
    decoder: &BitflipDecoder,
    r_i: &Response,
    weight: usize,
    trials: usize,
    channel: &ChannelParams,
    deltas: Deltas,
    p_index: usize,
) -> Result<WeightEstimate> {
    let n = r_i.n();
    if weight > n {
        return Err(Error::InvalidParameter(format!("error weight {weight} exceeds n = {n}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if decoder.n() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: decoder.n(),
        });
    }
    let p = (channel.m > 1).then_some(channel.p);
    if weight == 0 && channel.m == 1 {
        return Ok(WeightEstimate {
            p,
            weight,
            trials: 1,
            failures: 0,
            exhaustive: true,
        });
    }
    let total = binomial_coefficient(n, weight).unwrap_or(u128::MAX);
    let exhaustive = total <= trials as u128;
    let count = if exhaustive { total as usize } else { trials };

    let failures = (0..count)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let mut rng = stream(channel.seed, stream_id(p_index, weight, t));
            let support = if exhaustive {
                unrank_combination(t as u128, n, weight)
            } else {
                sample(&mut rng, n, weight).into_vec()
            };
            let mut first = r_i.bits().to_vec();
            for j in support {
                first[j] ^= 1;
            }
            let mut readouts = vec![first];
            for _ in 1..channel.m {
                readouts.push(flip_bsc(r_i.bits(), channel.p, &mut rng));
            }
            Ok(usize::from(!decode_ok(decoder, r_i.bits(), &readouts, deltas)?))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    Ok(WeightEstimate {
        p,
        weight,
        trials: count,
        failures,
        exhaustive,
    })
}

/// Direct Monte Carlo over the full channel: `m` BSC readouts per trial.
pub fn simulate_bsc(
    decoder: &BitflipDecoder,
    r_i: &Response,
    trials: usize,
    channel: &ChannelParams,
    deltas: Deltas,
) -> Result<WeightEstimate> {
    let failures = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let mut rng = stream(channel.seed, stream_id(0, 0, t));
            let readouts: Vec<Vec<u8>> = (0..channel.m).map(|_| flip_bsc(r_i.bits(), channel.p, &mut rng)).collect();
            Ok(usize::from(!decode_ok(decoder, r_i.bits(), &readouts, deltas)?))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(WeightEstimate {
        p: Some(channel.p),
        weight: 0,
        trials,
        failures,
        exhaustive: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailPolicy {
    /// Weights above `i_max` count as failures.
    #[default]
    Conservative,
    /// Weights above `i_max` contribute nothing.
    Truncated,
}

impl fmt::Display for TailPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailPolicy::Conservative => "conservative",
            TailPolicy::Truncated => "truncated",
        })
    }
}

impl FromStr for TailPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conservative" => Ok(TailPolicy::Conservative),
            "truncated" => Ok(TailPolicy::Truncated),
            other => Err(Error::InvalidParameter(format!("unknown tail policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub p: f64,
    pub p_block: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub per_weight: Vec<WeightEstimate>,
    pub curve: Vec<CurvePoint>,
    pub i_max: usize,
    pub tail_policy: TailPolicy,
}

impl SimReport {
    /// Estimates that apply at crossover `p`.
    pub fn weights_at(&self, p: f64) -> impl Iterator<Item = &WeightEstimate> {
        self.per_weight.iter().filter(move |w| w.p.is_none_or(|q| q == p))
    }

    /// `weight,trials,failures,p_err`, with a leading `p` column when
    /// estimates depend on p.
    pub fn write_weights_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let with_p = self.per_weight.iter().any(|e| e.p.is_some());
        if with_p {
            writeln!(w, "p,weight,trials,failures,p_err")?;
        } else {
            writeln!(w, "weight,trials,failures,p_err")?;
        }
        for e in &self.per_weight {
            if let Some(p) = e.p.filter(|_| with_p) {
                write!(w, "{p},")?;
            }
            writeln!(w, "{},{},{},{}", e.weight, e.trials, e.failures, e.rate())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub p_grid: Vec<f64>,
    pub i_max: usize,
    pub trials: usize,
    pub tail_policy: TailPolicy,
    pub m: usize,
    pub deltas: Deltas,
    pub seed: u64,
}

/// Smallest `i` with `P(weight > i) <= tol` at the largest grid point.
pub fn default_i_max(n: usize, p_grid: &[f64], tol: f64) -> usize {
    let p = p_grid.iter().copied().fold(0.0, f64::max);
    let pmf = binomial_pmf_all(n, p);
    let mut tail: f64 = 1.0;
    for (i, &pi) in pmf.iter().enumerate() {
        tail -= pi;
        if tail <= tol {
            return i;
        }
    }
    n
}

/// Combines per-weight failure rates with the weight distribution at each
/// grid point.
pub fn p_block(n: usize, p: f64, per_weight: &[&WeightEstimate], i_max: usize, tail: TailPolicy) -> f64 {
    let pmf = binomial_pmf_all(n, p);
    let mut rate = vec![1.0; i_max + 1];
    for e in per_weight {
        if e.weight <= i_max {
            rate[e.weight] = e.rate();
        }
    }
    let body: f64 = (0..=i_max.min(n)).map(|i| pmf[i] * rate[i]).sum();
    let rest = match tail {
        TailPolicy::Conservative => pmf[i_max.min(n) + 1..].iter().sum(),
        TailPolicy::Truncated => 0.0,
    };
    (body + rest).clamp(0.0, 1.0)
}

pub fn block_error_curve(decoder: &BitflipDecoder, r_i: &Response, cfg: &CurveConfig) -> Result<SimReport> {
    let n = r_i.n();
    if cfg.p_grid.is_empty() {
        return Err(Error::InvalidParameter("empty p grid".into()));
    }
    if cfg.i_max > n {
        return Err(Error::InvalidParameter(format!("i_max {} exceeds n = {n}", cfg.i_max)));
    }
    let mut per_weight = Vec::new();
    let mut curve = Vec::new();
    if cfg.m == 1 {
        let channel = ChannelParams::new(0.0, 1, cfg.seed)?;
        for i in 0..=cfg.i_max {
            per_weight.push(estimate_perr(decoder, r_i, i, cfg.trials, &channel, cfg.deltas)?);
        }
    }
    for (pi, &p) in cfg.p_grid.iter().enumerate() {
        let channel = ChannelParams::new(p, cfg.m, cfg.seed)?;
        if cfg.m > 1 {
            for i in 0..=cfg.i_max {
                per_weight.push(estimate_perr_indexed(decoder, r_i, i, cfg.trials, &channel, cfg.deltas, pi)?);
            }
        }
        let at_p: Vec<&WeightEstimate> = per_weight.iter().filter(|w| w.p.is_none_or(|q| q == p)).collect();
        curve.push(CurvePoint {
            p,
            p_block: p_block(n, p, &at_p, cfg.i_max, cfg.tail_policy),
        });
    }
    Ok(SimReport {
        per_weight,
        curve,
        i_max: cfg.i_max,
        tail_policy: cfg.tail_policy,
    })
}

/// Block error probability of a decoder correcting exactly up to `t` errors.
pub fn bdd_baseline(n: usize, t: usize, p_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    if t > n {
        return Err(Error::InvalidParameter(format!("t = {t} exceeds n = {n}")));
    }
    Ok(p_grid
        .iter()
        .map(|&p| CurvePoint {
            p,
            p_block: binomial_pmf_all(n, p)[t + 1..].iter().sum(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryReport {
    pub n: usize,
    pub n_rows: usize,
    pub ones: usize,
    pub bits_per_pair: u32,
    /// Integer-pair encoding of the instance code.
    pub instance_bits: usize,
    pub dense_bits: usize,
    pub code_offset_bits: usize,
    pub syndrome_bits: usize,
    /// Size of supplied helper data, if any.
    pub helper: Option<(HelperKind, usize)>,
}

fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

pub fn memory_report(h: &SparseBinaryMatrix, helper: Option<&HelperData>) -> MemoryReport {
    let bits_per_pair = ceil_log2(h.n_rows()) + ceil_log2(h.n_cols());
    MemoryReport {
        n: h.n_cols(),
        n_rows: h.n_rows(),
        ones: h.nnz(),
        bits_per_pair,
        instance_bits: h.nnz() * bits_per_pair as usize,
        dense_bits: h.n_rows() * h.n_cols(),
        code_offset_bits: h.n_cols(),
        syndrome_bits: h.n_rows(),
        helper: helper.map(|d| (d.kind, d.size_bits())),
    }
}

impl fmt::Display for MemoryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "storage (bits)")?;
        writeln!(
            f,
            "  instance code, integer pairs : {} ({} pairs x {} bits)",
            self.instance_bits, self.ones, self.bits_per_pair
        )?;
        writeln!(f, "  instance code, dense         : {}", self.dense_bits)?;
        writeln!(f, "  code-offset helper           : {}", self.code_offset_bits)?;
        writeln!(f, "  syndrome helper              : {}", self.syndrome_bits)?;
        if let Some((kind, size)) = self.helper {
            writeln!(f, "  supplied {kind} helper : {size}")?;
        }
        Ok(())
    }
}

/// A named curve for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub source: String,
    pub points: Vec<CurvePoint>,
}

/// `p,p_block` for a single unnamed curve, `p,p_block,source` otherwise.
/// `p_block` is printed in exponent form since it spans many decades.
pub fn write_curves_csv<W: Write>(w: &mut W, curves: &[Curve]) -> Result<()> {
    let named = curves.len() > 1;
    if named {
        writeln!(w, "p,p_block,source")?;
    } else {
        writeln!(w, "p,p_block")?;
    }
    for c in curves {
        if named && c.source.contains([',', '\n']) {
            return Err(Error::InvalidParameter(format!("curve name `{}` is not CSV-safe", c.source)));
        }
        for pt in &c.points {
            if named {
                writeln!(w, "{},{:e},{}", pt.p, pt.p_block, c.source)?;
            } else {
                writeln!(w, "{},{:e}", pt.p, pt.p_block)?;
            }
        }
    }
    Ok(())
}

/// Reads either CSV layout; rows are grouped by source in first-seen order.
pub fn read_curves_csv<R: BufRead>(r: R) -> Result<Vec<Curve>> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(Error::Parse { line: 1, msg: "empty CSV".into() }),
    };
    let named = match header.trim() {
        "p,p_block" => false,
        "p,p_block,source" => true,
        other => return Err(Error::Parse { line: 1, msg: format!("unexpected header `{other}`") }),
    };
    let mut curves: Vec<Curve> = Vec::new();
    for (no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse { line: no + 1, msg: msg.to_string() };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != if named { 3 } else { 2 } {
            return Err(bad("wrong number of fields"));
        }
        let p: f64 = fields[0].parse().map_err(|_| bad("bad p"))?;
        let p_block: f64 = fields[1].parse().map_err(|_| bad("bad p_block"))?;
        let source = if named { fields[2].to_string() } else { String::new() };
        match curves.iter_mut().find(|c| c.source == source) {
            Some(c) => c.points.push(CurvePoint { p, p_block }),
            None => curves.push(Curve { source, points: vec![CurvePoint { p, p_block }] }),
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_eg;
    use proptest::prelude::*;

    fn eg24_decoder() -> BitflipDecoder {
        BitflipDecoder::new(build_eg(2, 4).unwrap().incidence_matrix())
    }

    #[test]
    fn pmf_examples() {
        assert!((binomial_pmf(4, 2, 0.5) - 0.375).abs() < 1e-12);
        assert_eq!(binomial_pmf(5, 0, 0.0), 1.0);
        assert_eq!(binomial_pmf(5, 1, 0.0), 0.0);
        assert_eq!(binomial_pmf(3, 4, 0.2), 0.0);
        for n in [1, 16, 128, 256, 1024] {
            for p in [0.001, 0.05, 0.3, 0.5] {
                let s: f64 = binomial_pmf_all(n, p).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "n={n} p={p} sum={s}");
            }
        }
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial_coefficient(16, 2), Some(120));
        assert_eq!(binomial_coefficient(4, 5), None);
        for n in 1..60 {
            for k in 1..n {
                let pascal = binomial_coefficient(n - 1, k - 1).unwrap() + binomial_coefficient(n - 1, k).unwrap();
                assert_eq!(binomial_coefficient(n, k), Some(pascal));
            }
        }
    }

    #[test]
    fn unrank_enumerates_each_subset_once() {
        let mut seen = std::collections::HashSet::new();
        for idx in 0..binomial_coefficient(9, 4).unwrap() {
            let s = unrank_combination(idx, 9, 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(|&x| x < 9));
            assert!(seen.insert(s));
        }
        assert_eq!(seen.len(), 126);
    }

    #[test]
    fn bdd_identities() {
        let grid = [0.0, 0.001, 0.01, 0.2, 0.5];
        let c = bdd_baseline(127, 11, &grid).unwrap();
        for pt in &c {
            let head: f64 = binomial_pmf_all(127, pt.p)[..=11].iter().sum();
            assert!((pt.p_block - (1.0 - head)).abs() < 1e-12);
        }
        for pt in bdd_baseline(20, 20, &grid).unwrap() {
            assert_eq!(pt.p_block, 0.0);
        }
        for pt in bdd_baseline(20, 0, &grid).unwrap() {
            assert!((pt.p_block - (1.0 - (1.0 - pt.p).powi(20))).abs() < 1e-12);
        }
        assert!(bdd_baseline(5, 6, &grid).is_err());
    }

    #[test]
    fn bsc_corrupt_behaviour() {
        let r = Response::new(vec![0; 10_000]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let same = bsc_corrupt(&r, &ChannelParams::new(0.0, 3, 0).unwrap(), &mut rng);
        assert!(same.iter().all(|x| x == &r));
        let noisy = bsc_corrupt(&r, &ChannelParams::new(0.5, 1, 0).unwrap(), &mut rng);
        let frac = crate::bits::weight(noisy[0].bits()) as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 3.0 * 0.005);
        let a = bsc_corrupt(&r, &ChannelParams::new(0.1, 2, 0).unwrap(), &mut ChaCha8Rng::seed_from_u64(9));
        let b = bsc_corrupt(&r, &ChannelParams::new(0.1, 2, 0).unwrap(), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert!(ChannelParams::new(0.6, 1, 0).is_err());
        assert!(ChannelParams::new(0.1, 0, 0).is_err());
    }

    #[test]
    fn perr_small_weights_on_eg24() {
        let d = eg24_decoder();
        let r = Response::new(vec![0; 16]).unwrap();
        let ch = ChannelParams::new(0.0, 1, 1).unwrap();
        let e0 = estimate_perr(&d, &r, 0, 10, &ch, Deltas::N128).unwrap();
        assert_eq!(e0.failures, 0);
        let e1 = estimate_perr(&d, &r, 1, 10_000, &ch, Deltas::N128).unwrap();
        assert_eq!((e1.trials, e1.failures, e1.exhaustive), (16, 0, true));
        let e2 = estimate_perr(&d, &r, 2, 50, &ch, Deltas::N128).unwrap();
        assert!(!e2.exhaustive && e2.trials == 50);
        assert!(estimate_perr(&d, &r, 17, 10, &ch, Deltas::N128).is_err());
        assert!(estimate_perr(&d, &r, 1, 0, &ch, Deltas::N128).is_err());
    }

    #[test]
    fn curve_properties() {
        let d = eg24_decoder();
        let r = Response::new(vec![0; 16]).unwrap();
        let mut cfg = CurveConfig {
            p_grid: vec![0.0, 0.01, 0.05, 0.1, 0.2],
            i_max: 3,
            trials: 200,
            tail_policy: TailPolicy::Conservative,
            m: 1,
            deltas: Deltas::N128,
            seed: 4,
        };
        let cons = block_error_curve(&d, &r, &cfg).unwrap();
        assert_eq!(cons.curve[0].p_block, 0.0);
        assert!(cons.curve.windows(2).all(|w| w[0].p_block <= w[1].p_block));
        cfg.tail_policy = TailPolicy::Truncated;
        let exact = block_error_curve(&d, &r, &cfg).unwrap();
        for (a, b) in cons.curve.iter().zip(&exact.curve) {
            assert!(a.p_block >= b.p_block);
        }
        cfg.p_grid.clear();
        assert!(block_error_curve(&d, &r, &cfg).is_err());
    }

    #[test]
    fn parallel_runs_are_repeatable() {
        let d = eg24_decoder();
        let r = Response::new(vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 0]).unwrap();
        let ch = ChannelParams::new(0.05, 3, 77).unwrap();
        let a = estimate_perr(&d, &r, 3, 300, &ch, Deltas::N128).unwrap();
        let b = estimate_perr(&d, &r, 3, 300, &ch, Deltas::N128).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_i_max_covers_tail() {
        let i = default_i_max(128, &[0.001, 0.05], 1e-6);
        let tail: f64 = binomial_pmf_all(128, 0.05)[i + 1..].iter().sum();
        assert!(tail <= 1e-6);
        let below: f64 = binomial_pmf_all(128, 0.05)[i..].iter().sum();
        assert!(below > 1e-6);
    }

    #[test]
    fn memory_accounting() {
        let h = build_eg(2, 2).unwrap().incidence_matrix();
        let m = memory_report(&h, None);
        assert_eq!((m.ones, m.bits_per_pair, m.instance_bits), (12, 5, 60));
        let id = SparseBinaryMatrix::identity(128);
        let m = memory_report(&id, None);
        assert_eq!((m.code_offset_bits, m.syndrome_bits), (128, 128));
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
    }

    #[test]
    fn csv_layouts() {
        let one = vec![Curve {
            source: String::new(),
            points: vec![CurvePoint { p: 0.01, p_block: 1.5e-7 }],
        }];
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &one).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "p,p_block\n0.01,1.5e-7\n");
        assert_eq!(read_curves_csv(&buf[..]).unwrap(), one);
        assert!(read_curves_csv(&b"q,r\n"[..]).is_err());
        assert!(read_curves_csv(&b"p,p_block\n0.1\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(points in prop::collection::vec((0.0f64..=0.5, 0.0f64..=1.0), 1..20)) {
            let curves = vec![
                Curve { source: "instance".into(), points: points.iter().map(|&(p, b)| CurvePoint { p, p_block: b }).collect() },
                Curve { source: "bdd".into(), points: points.iter().map(|&(p, b)| CurvePoint { p, p_block: b / 2.0 }).collect() },
            ];
            let mut buf = Vec::new();
            write_curves_csv(&mut buf, &curves).unwrap();
            prop_assert_eq!(read_curves_csv(&buf[..]).unwrap(), curves);
        }

        #[test]
        fn conservative_curve_is_monotone(rates in prop::collection::vec(0.0f64..=1.0, 6)) {
            let mut sorted = rates.clone();
            sorted.sort_by(f64::total_cmp);
            let ests: Vec<WeightEstimate> = sorted.iter().enumerate().map(|(i, &r)| WeightEstimate {
                p: None, weight: i, trials: 1000, failures: (r * 1000.0) as usize, exhaustive: false,
            }).collect();
            let refs: Vec<&WeightEstimate> = ests.iter().collect();
            let grid = [0.0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5];
            let vals: Vec<f64> = grid.iter().map(|&p| p_block(32, p, &refs, 5, TailPolicy::Conservative)).collect();
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        }
    }
}

//! Secure sketches: the per-response instance code and the two classic
//! helper-data constructions it is compared against.
//!
//! The instance code is assembled in a [`DualRowPool`]. Rows from the
//! configured base constructions are kept only when orthogonal to the
//! enrolled response, so every pool row is a parity check the response
//! satisfies. Independent rows are admitted until the rank reaches
//! `n - target_k`; after that only rows already in the span are accepted,
//! which fixes the code dimension while still adding checks.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits;
use crate::decode::BitflipDecoder;
use crate::geometry::{build_eg, build_pg, eg_counts, pg_counts};
use crate::gf::prime_power;
use crate::rs_construct::{build_base, build_rs_ldpc};
use crate::sparsemat::{nullspace_basis, Gf2Basis, SparseBinaryMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Response {
    bits: Vec<u8>,
}

impl Response {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidParameter("response must not be empty".into()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("response bit {b} is not binary")));
        }
        Ok(Response { bits })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Response {
            bits: (0..n.max(1)).map(|_| rng.gen_range(0..2u8)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn to_hex(&self) -> String {
        bits::to_hex(&self.bits)
    }

    pub fn from_hex(s: &str, n: usize) -> Result<Self> {
        Self::new(bits::from_hex(s, n)?)
    }

    /// `n=<len>` then `bits=<hex>` lines.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "n={}", self.n())?;
        writeln!(w, "bits={}", self.to_hex())?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let kv = read_key_values(r)?;
        let n = parse_field::<usize>(&kv, "n")?;
        Self::from_hex(get_field(&kv, "bits")?, n)
    }
}

fn read_key_values<R: BufRead>(r: R) -> Result<HashMap<String, String>> {
    let mut kv = HashMap::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
            line: no + 1,
            msg: format!("expected key=value, got `{t}`"),
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(kv)
}

fn get_field<'a>(kv: &'a HashMap<String, String>, key: &str) -> Result<&'a str> {
    kv.get(key).map(String::as_str).ok_or_else(|| Error::Parse {
        line: 0,
        msg: format!("missing `{key}`"),
    })
}

fn parse_field<T: FromStr>(kv: &HashMap<String, String>, key: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    get_field(kv, key)?.parse().map_err(|e: T::Err| Error::Parse {
        line: 0,
        msg: format!("`{key}`: {e}"),
    })
}

/// A base parity-check construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Eg { m: u32, q: u32 },
    Pg { m: u32, q: u32 },
    Rs { q: u32, rho: usize, gamma: usize },
}

/// A base construction plus an optional seeded column permutation, which
/// yields a different code with the same parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub permutation: Option<u64>,
}

impl SourceSpec {
    pub fn eg(m: u32, q: u32) -> Self {
        SourceKind::Eg { m, q }.into()
    }

    pub fn pg(m: u32, q: u32) -> Self {
        SourceKind::Pg { m, q }.into()
    }

    pub fn rs(q: u32, rho: usize, gamma: usize) -> Self {
        SourceKind::Rs { q, rho, gamma }.into()
    }

    pub fn permuted(mut self, seed: u64) -> Self {
        self.permutation = Some(seed);
        self
    }

    /// Code length produced by this source, if the parameters are sane.
    pub fn length(&self) -> Option<usize> {
        match self.kind {
            SourceKind::Eg { m, q } => (q as u64).checked_pow(m).map(|n| n as usize),
            SourceKind::Pg { m, q } if q >= 2 => (q as u64)
                .checked_pow(m + 1)
                .map(|t| ((t - 1) / (q as u64 - 1)) as usize),
            SourceKind::Pg { .. } => None,
            SourceKind::Rs { q, rho, .. } => Some(rho * q as usize),
        }
    }

    pub fn row_weight(&self) -> usize {
        match self.kind {
            SourceKind::Eg { q, .. } => q as usize,
            SourceKind::Pg { q, .. } => q as usize + 1,
            SourceKind::Rs { rho, .. } => rho,
        }
    }

    pub fn col_weight(&self) -> usize {
        match self.kind {
            SourceKind::Eg { m, q } => eg_counts(m, q as u64).3 as usize,
            SourceKind::Pg { m, q } => pg_counts(m, q as u64).3 as usize,
            SourceKind::Rs { gamma, .. } => gamma,
        }
    }

    pub fn build(&self) -> Result<SparseBinaryMatrix> {
        let h = match self.kind {
            SourceKind::Eg { m, q } => build_eg(m, q)?.incidence_matrix(),
            SourceKind::Pg { m, q } => build_pg(m, q)?.incidence_matrix(),
            SourceKind::Rs { q, rho, gamma } => build_rs_ldpc(&build_base(q, rho)?, gamma)?,
        };
        match self.permutation {
            None => Ok(h),
            Some(seed) => {
                let mut perm: Vec<usize> = (0..h.n_cols()).collect();
                perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                h.permute_columns(&perm)
            }
        }
    }
}

impl From<SourceKind> for SourceSpec {
    fn from(kind: SourceKind) -> Self {
        SourceSpec {
            kind,
            permutation: None,
        }
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SourceKind::Eg { m, q } => write!(f, "eg:{m}:{q}")?,
            SourceKind::Pg { m, q } => write!(f, "pg:{m}:{q}")?,
            SourceKind::Rs { q, rho, gamma } => write!(f, "rs:{q}:{rho}:{gamma}")?,
        }
        if let Some(seed) = self.permutation {
            write!(f, "@{seed}")?;
        }
        Ok(())
    }
}

impl FromStr for SourceSpec {
    type Err = Error;

    /// `eg:M:Q`, `pg:M:Q` or `rs:Q:RHO:GAMMA`, optionally suffixed `@SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse source `{s}`"));
        let (body, perm) = match s.trim().split_once('@') {
            Some((b, p)) => (b, Some(p.parse::<u64>().map_err(|_| bad())?)),
            None => (s.trim(), None),
        };
        let parts: Vec<&str> = body.split(':').collect();
        let num = |i: usize| -> Result<u32> { parts.get(i).and_then(|t| t.parse().ok()).ok_or_else(bad) };
        let kind = match (parts.first().copied(), parts.len()) {
            (Some("eg"), 3) => SourceKind::Eg { m: num(1)?, q: num(2)? },
            (Some("pg"), 3) => SourceKind::Pg { m: num(1)?, q: num(2)? },
            (Some("rs"), 4) => SourceKind::Rs {
                q: num(1)?,
                rho: num(2)? as usize,
                gamma: num(3)? as usize,
            },
            _ => return Err(bad()),
        };
        Ok(SourceSpec {
            kind,
            permutation: perm,
        })
    }
}

pub fn format_sources(sources: &[SourceSpec]) -> String {
    sources.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_sources(s: &str) -> Result<Vec<SourceSpec>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Base constructions of length exactly `n`: EG, then PG, then RS, each in
/// decreasing row weight, followed by the weight-2 constructions.
/// [`build_instance_code`] takes only rank-raising rows from weight-2 sources.
pub fn default_sources(n: usize) -> Vec<SourceSpec> {
    let mut eg = Vec::new();
    let mut pg = Vec::new();
    let mut rs = Vec::new();
    for q in 2..=n as u32 {
        if prime_power(q).is_none() {
            continue;
        }
        for m in 2..=16u32 {
            let Some(qm) = (q as u64).checked_pow(m) else { break };
            if qm > n as u64 * q as u64 {
                break;
            }
            if qm == n as u64 {
                eg.push(SourceSpec::eg(m, q));
            }
            if (qm * q as u64 - 1) / (q as u64 - 1) == n as u64 {
                pg.push(SourceSpec::pg(m, q));
            }
        }
        if n.is_multiple_of(q as usize) {
            let rho = n / q as usize;
            if rho > 1 && rho < q as usize && q <= 256 {
                rs.push(SourceSpec::rs(q, rho, q as usize));
            }
        }
    }
    let by_weight = |v: &mut Vec<SourceSpec>| v.sort_by_key(|s| std::cmp::Reverse(s.row_weight()));
    by_weight(&mut eg);
    by_weight(&mut pg);
    by_weight(&mut rs);
    let (wide, narrow): (Vec<SourceSpec>, Vec<SourceSpec>) =
        eg.into_iter().chain(pg).chain(rs).partition(|s| s.row_weight() > 2);
    wide.into_iter().chain(narrow).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionConfig {
    pub target_k: usize,
    pub sources: Vec<SourceSpec>,
    /// Hard cap on the number of rows of H.
    pub max_rows: usize,
    /// Largest weight a combination row may have.
    pub combo_weight_cap: usize,
    /// Rows held back from the combination stage for balancing.
    pub balance_rows: usize,
    /// Column weight balancing tries to reach everywhere; `None` uses the
    /// mean column weight after the combination stage, rounded up.
    pub min_col_weight: Option<usize>,
    pub seed: u64,
}

impl ConstructionConfig {
    /// Defaults derived from the given sources.
    pub fn with_sources(n: usize, target_k: usize, sources: Vec<SourceSpec>, seed: u64) -> Self {
        let rho_max = sources.iter().map(SourceSpec::row_weight).max().unwrap_or(2);
        let max_rows = default_max_rows(n, target_k);
        ConstructionConfig {
            target_k,
            sources,
            max_rows,
            combo_weight_cap: 2 * rho_max,
            balance_rows: max_rows / 4,
            min_col_weight: None,
            seed,
        }
    }

    pub fn for_length(n: usize, target_k: usize, seed: u64) -> Self {
        Self::with_sources(n, target_k, default_sources(n), seed)
    }
}

/// Default row budget: four rows per parity constraint.
pub fn default_max_rows(n: usize, target_k: usize) -> usize {
    4 * (n - target_k.min(n))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Row `row` of configured source `source`.
    Base { source: usize, row: usize },
    /// XOR of two earlier pool rows.
    Combination { parents: (usize, usize) },
    /// A base row or combination added to raise low column weights.
    Balancing(Box<Provenance>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolRow {
    pub support: Vec<usize>,
    pub provenance: Provenance,
}

/// Why a row offered to the pool was not admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    Zero,
    NotDual,
    Duplicate,
    TooHeavy,
    RankCap,
    RowBudget,
}

/// Rows dual to a bound response, with rank bookkeeping.
#[derive(Debug, Clone)]
pub struct DualRowPool {
    response: Response,
    rows: Vec<PoolRow>,
    seen: HashSet<Vec<usize>>,
    basis: Gf2Basis,
    rank_cap: usize,
    /// Dual base rows that were offered but not admitted.
    reserve: Vec<PoolRow>,
}

impl DualRowPool {
    pub fn new(response: Response) -> Self {
        let n = response.n();
        Self::with_rank_cap(response, n)
    }

    pub fn with_rank_cap(response: Response, rank_cap: usize) -> Self {
        let n = response.n();
        DualRowPool {
            response,
            rows: Vec::new(),
            seen: HashSet::new(),
            basis: Gf2Basis::new(n),
            rank_cap,
            reserve: Vec::new(),
        }
    }

    pub fn response(&self) -> &Response {
        &self.response
    }

    pub fn rows(&self) -> &[PoolRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn rank_cap(&self) -> usize {
        self.rank_cap
    }

    pub fn reserve(&self) -> &[PoolRow] {
        &self.reserve
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.response.n()];
        for row in &self.rows {
            for &j in &row.support {
                w[j] += 1;
            }
        }
        w
    }

    pub fn is_dual(&self, support: &[usize]) -> bool {
        bits::support_parity(support, self.response.bits()) == 0
    }

    pub fn matrix(&self) -> SparseBinaryMatrix {
        SparseBinaryMatrix::from_rows(
            self.response.n(),
            self.rows.iter().map(|r| r.support.clone()).collect(),
        )
        .expect("pool rows are valid supports")
    }

    /// Checks every admission rule without mutating the pool. `headroom` is
    /// the number of row slots that must stay free for rank growth when the
    /// row is dependent.
    fn admissible(&self, support: &[usize], max_rows: usize, headroom: usize) -> std::result::Result<bool, Rejection> {
        if support.is_empty() {
            return Err(Rejection::Zero);
        }
        if !self.is_dual(support) {
            return Err(Rejection::NotDual);
        }
        if self.seen.contains(support) {
            return Err(Rejection::Duplicate);
        }
        if self.rows.len() >= max_rows {
            return Err(Rejection::RowBudget);
        }
        let independent = !self.basis.contains(support);
        if independent && self.basis.rank() >= self.rank_cap {
            return Err(Rejection::RankCap);
        }
        if !independent && self.rows.len() + headroom >= max_rows {
            return Err(Rejection::RowBudget);
        }
        Ok(independent)
    }

    fn push(&mut self, support: Vec<usize>, provenance: Provenance) {
        self.basis.insert(&support);
        self.seen.insert(support.clone());
        self.rows.push(PoolRow {
            support,
            provenance,
        });
    }

    /// Offers one row. Dependent rows are refused while they would eat into
    /// the slots still needed to reach the rank cap.
    pub fn offer(&mut self, support: Vec<usize>, provenance: Provenance, max_rows: usize) -> std::result::Result<(), Rejection> {
        let headroom = self.rank_cap.saturating_sub(self.basis.rank());
        self.admissible(&support, max_rows, headroom)?;
        self.push(support, provenance);
        Ok(())
    }

    /// Streams base rows through the dual filter. Non-dual rows are dropped
    /// immediately; dual rows that cannot be admitted go to the reserve.
    /// With `independent_only`, rows already in the span are dropped too.
    pub fn absorb<I>(&mut self, source: usize, rows: I, max_rows: usize, independent_only: bool) -> usize
    where
        I: IntoIterator<Item = Vec<usize>>,
    {
        let before = self.rows.len();
        for (row, support) in rows.into_iter().enumerate() {
            if !self.is_dual(&support) {
                continue;
            }
            if independent_only && (self.basis.rank() >= self.rank_cap || self.basis.contains(&support)) {
                continue;
            }
            let provenance = Provenance::Base { source, row };
            match self.offer(support.clone(), provenance.clone(), max_rows) {
                Ok(()) => {}
                Err(Rejection::RankCap | Rejection::RowBudget) => self.reserve.push(PoolRow {
                    support,
                    provenance,
                }),
                Err(_) => {}
            }
        }
        self.rows.len() - before
    }
}

/// Keeps exactly the rows of `base` that are orthogonal to `r_i`.
pub fn filter_dual_rows(base: &SparseBinaryMatrix, r_i: &Response) -> Result<DualRowPool> {
    if base.n_cols() != r_i.n() {
        return Err(Error::LengthMismatch {
            expected: r_i.n(),
            actual: base.n_cols(),
        });
    }
    let mut pool = DualRowPool::new(r_i.clone());
    pool.absorb(0, base.rows().iter().cloned(), usize::MAX, false);
    Ok(pool)
}

/// Appends XORs of pool row pairs with weight at most `combo_weight_cap`,
/// lightest first with seeded tie-breaking, until the pool has `limit` rows.
pub fn augment_combinations<R: Rng + ?Sized>(
    pool: &mut DualRowPool,
    cfg: &ConstructionConfig,
    limit: usize,
    rng: &mut R,
) -> usize {
    let limit = limit.min(cfg.max_rows);
    let cap = cfg.combo_weight_cap;
    let n_rows = pool.rows.len();
    let mut candidates: Vec<(usize, u64, usize, usize)> = Vec::new();
    for a in 0..n_rows {
        for b in a + 1..n_rows {
            let (ra, rb) = (&pool.rows[a].support, &pool.rows[b].support);
            let overlap = bits::support_overlap(ra, rb);
            let w = ra.len() + rb.len() - 2 * overlap;
            if w == 0 || w > cap {
                continue;
            }
            candidates.push((w, rng.gen(), a, b));
        }
    }
    candidates.sort_unstable();
    let mut added = 0;
    for (_, _, a, b) in candidates {
        if pool.rows.len() >= limit {
            break;
        }
        let support = bits::support_xor(&pool.rows[a].support, &pool.rows[b].support);
        if pool
            .offer(support, Provenance::Combination { parents: (a, b) }, limit)
            .is_ok()
        {
            added += 1;
        }
    }
    added
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceReport {
    pub added: usize,
    /// Columns still below the target weight.
    pub unreachable: Vec<usize>,
    /// max - min column weight after balancing.
    pub spread: usize,
}

/// Greedily adds admissible rows covering columns lighter than
/// `target`. Candidates are reserve base rows and pairwise combinations;
/// the one covering the most deficient columns wins, then the lighter one,
/// then the earliest.
pub fn balance_columns(pool: &mut DualRowPool, cfg: &ConstructionConfig, target: usize) -> BalanceReport {
    let n = pool.response.n();
    let mut weights = pool.col_weights();
    let mut added = 0;
    let mut stuck: HashSet<usize> = HashSet::new();

    loop {
        if pool.rows.len() >= cfg.max_rows {
            break;
        }
        let Some(col) = (0..n)
            .filter(|j| weights[*j] < target && !stuck.contains(j))
            .min_by_key(|&j| (weights[j], j))
        else {
            break;
        };
        let deficit = |s: &[usize], w: &[usize]| s.iter().filter(|&&j| w[j] < target).count();

        // (score, weight, tiebreak order, candidate)
        let mut best: Option<(usize, usize, usize, Vec<usize>, Provenance)> = None;
        let mut consider = |support: Vec<usize>, prov: Provenance, order: usize, pool: &DualRowPool| {
            if support.len() > cfg.combo_weight_cap.max(1) && !matches!(prov, Provenance::Base { .. }) {
                return;
            }
            if pool.admissible(&support, cfg.max_rows, 0).is_err() {
                return;
            }
            let score = deficit(&support, &weights);
            let better = match &best {
                None => true,
                Some((s, w, o, _, _)) => (score, std::cmp::Reverse(support.len()), std::cmp::Reverse(order)) > (*s, std::cmp::Reverse(*w), std::cmp::Reverse(*o)),
            };
            if better {
                best = Some((score, support.len(), order, support, prov));
            }
        };

        for (i, r) in pool.reserve.iter().enumerate() {
            if r.support.binary_search(&col).is_ok() {
                consider(r.support.clone(), r.provenance.clone(), i, pool);
            }
        }
        let with_col: Vec<usize> = (0..pool.rows.len())
            .filter(|&i| pool.rows[i].support.binary_search(&col).is_ok())
            .collect();
        for &a in &with_col {
            for b in 0..pool.rows.len() {
                if pool.rows[b].support.binary_search(&col).is_ok() {
                    continue;
                }
                let support = bits::support_xor(&pool.rows[a].support, &pool.rows[b].support);
                let parents = (a.min(b), a.max(b));
                consider(support, Provenance::Combination { parents }, pool.reserve.len() + a * pool.rows.len() + b, pool);
            }
        }

        match best {
            Some((_, _, _, support, prov)) => {
                for &j in &support {
                    weights[j] += 1;
                }
                pool.push(support, Provenance::Balancing(Box::new(prov)));
                added += 1;
            }
            None => {
                stuck.insert(col);
            }
        }
    }

    let unreachable: Vec<usize> = (0..n).filter(|&j| weights[j] < target).collect();
    let spread = weights.iter().max().unwrap_or(&0) - weights.iter().min().unwrap_or(&0);
    BalanceReport {
        added,
        unreachable,
        spread,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Base,
    Combinations,
    Balancing,
    Fill,
}

#[derive(Debug, Clone)]
pub struct InstanceCode {
    pub h: SparseBinaryMatrix,
    pub n: usize,
    pub k: usize,
    pub provenance: Vec<Provenance>,
    pub config: ConstructionConfig,
    /// `target rank - achieved rank`; zero when the target dimension was met.
    pub rank_shortfall: usize,
    /// Set when the enrolled response is all-zero, which every linear code contains.
    pub degenerate_response: bool,
    /// Rank and row count after each pipeline stage.
    pub stages: Vec<(Stage, usize, usize)>,
    pub balance: BalanceReport,
    /// Configured sources skipped because their length differs from n.
    pub skipped_sources: Vec<SourceSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProvenanceCounts {
    pub base: usize,
    pub combination: usize,
    pub balancing: usize,
}

impl InstanceCode {
    pub fn target_reached(&self) -> bool {
        self.rank_shortfall == 0
    }

    pub fn provenance_counts(&self) -> ProvenanceCounts {
        let mut c = ProvenanceCounts::default();
        for p in &self.provenance {
            match p {
                Provenance::Base { .. } => c.base += 1,
                Provenance::Combination { .. } => c.combination += 1,
                Provenance::Balancing(_) => c.balancing += 1,
            }
        }
        c
    }

    /// Header comment block followed by the matrix in coordinate format.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let c = self.provenance_counts();
        writeln!(w, "# puf-ldpc instance code")?;
        writeln!(w, "# n={}", self.n)?;
        writeln!(w, "# k={}", self.k)?;
        writeln!(w, "# target_k={}", self.config.target_k)?;
        writeln!(w, "# seed={}", self.config.seed)?;
        writeln!(w, "# sources={}", format_sources(&self.config.sources))?;
        writeln!(w, "# rows_base={}", c.base)?;
        writeln!(w, "# rows_combination={}", c.combination)?;
        writeln!(w, "# rows_balancing={}", c.balancing)?;
        self.h.write_to(w)
    }
}

/// A code file as read back: header fields plus the matrix.
#[derive(Debug, Clone)]
pub struct CodeFile {
    pub header: HashMap<String, String>,
    pub h: SparseBinaryMatrix,
}

impl CodeFile {
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let header = text
            .lines()
            .take_while(|l| l.trim().is_empty() || l.starts_with('#'))
            .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        let h = SparseBinaryMatrix::read_from(text.as_bytes())?;
        Ok(CodeFile { header, h })
    }

    pub fn n(&self) -> usize {
        self.h.n_cols()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Option<T> {
        self.header.get(key).and_then(|v| v.parse().ok())
    }
}

/// Builds the instance code for `r_i`.
///
/// Base rows from every matching source pass through the dual filter in
/// configured order. Combinations come next, leaving `balance_rows` slots
/// free for balancing, and any slots balancing does not use are filled with
/// further combinations. The returned code always contains `r_i`; if the
/// sources cannot supply `n - target_k` independent dual rows the code has a
/// larger dimension and `rank_shortfall` says by how much.
pub fn build_instance_code(r_i: &Response, cfg: &ConstructionConfig) -> Result<InstanceCode> {
    let n = r_i.n();
    if cfg.target_k == 0 || cfg.target_k >= n {
        return Err(Error::InvalidParameter(format!(
            "target dimension must satisfy 0 < k < n = {n}, got {}",
            cfg.target_k
        )));
    }
    let (matching, skipped): (Vec<_>, Vec<_>) = cfg
        .sources
        .iter()
        .enumerate()
        .partition(|(_, s)| s.length() == Some(n));
    if matching.is_empty() {
        return Err(Error::NoSourceForLength(n));
    }
    let rank_target = n - cfg.target_k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pool = DualRowPool::with_rank_cap(r_i.clone(), rank_target);
    let mut stages = Vec::new();

    for (idx, src) in matching {
        let narrow = src.row_weight() <= 2;
        if narrow && pool.rank() >= rank_target {
            continue;
        }
        let base = src.build()?;
        pool.absorb(idx, base.rows().iter().cloned(), cfg.max_rows, narrow);
    }
    stages.push((Stage::Base, pool.rank(), pool.len()));

    let combo_limit = cfg.max_rows.saturating_sub(cfg.balance_rows);
    augment_combinations(&mut pool, cfg, combo_limit, &mut rng);
    stages.push((Stage::Combinations, pool.rank(), pool.len()));

    let target = cfg.min_col_weight.unwrap_or_else(|| {
        let ones: usize = pool.rows.iter().map(|r| r.support.len()).sum();
        ones.div_ceil(n)
    });
    let balance = balance_columns(&mut pool, cfg, target);
    stages.push((Stage::Balancing, pool.rank(), pool.len()));

    augment_combinations(&mut pool, cfg, cfg.max_rows, &mut rng);
    stages.push((Stage::Fill, pool.rank(), pool.len()));

    let h = pool.matrix();
    let rank = pool.rank();
    debug_assert!(h.is_codeword(r_i.bits()).unwrap_or(false));
    Ok(InstanceCode {
        n,
        k: n - rank,
        provenance: pool.rows.iter().map(|r| r.provenance.clone()).collect(),
        config: cfg.clone(),
        rank_shortfall: rank_target - rank,
        degenerate_response: r_i.is_zero(),
        stages,
        balance,
        skipped_sources: skipped.into_iter().map(|(_, s)| *s).collect(),
        h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HelperKind {
    CodeOffset,
    Syndrome,
}

impl fmt::Display for HelperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HelperKind::CodeOffset => "code-offset",
            HelperKind::Syndrome => "syndrome",
        })
    }
}

impl FromStr for HelperKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "code-offset" => Ok(HelperKind::CodeOffset),
            "syndrome" => Ok(HelperKind::Syndrome),
            other => Err(Error::InvalidParameter(format!("unknown helper kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperData {
    pub kind: HelperKind,
    pub payload: Vec<u8>,
    pub code_ref: String,
}

impl HelperData {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "kind={}", self.kind)?;
        writeln!(w, "code_ref={}", self.code_ref)?;
        writeln!(w, "len={}", self.payload.len())?;
        writeln!(w, "payload={}", bits::to_hex(&self.payload))?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let kv = read_key_values(r)?;
        let len = parse_field::<usize>(&kv, "len")?;
        Ok(HelperData {
            kind: parse_field(&kv, "kind")?,
            payload: bits::from_hex(get_field(&kv, "payload")?, len)?,
            code_ref: kv.get("code_ref").cloned().unwrap_or_default(),
        })
    }

    pub fn size_bits(&self) -> usize {
        self.payload.len()
    }
}

/// Uniformly random codeword of the code with parity-check matrix `h`.
pub fn random_codeword<R: Rng + ?Sized>(h: &SparseBinaryMatrix, rng: &mut R) -> Vec<u8> {
    let mut c = vec![0u8; h.n_cols()];
    for v in nullspace_basis(h) {
        if rng.gen::<bool>() {
            bits::xor_in_place(&mut c, &v);
        }
    }
    c
}

pub fn code_offset_enroll<R: Rng + ?Sized>(
    r_i: &Response,
    h: &SparseBinaryMatrix,
    code_ref: &str,
    rng: &mut R,
) -> Result<HelperData> {
    if h.n_cols() != r_i.n() {
        return Err(Error::LengthMismatch {
            expected: r_i.n(),
            actual: h.n_cols(),
        });
    }
    let c = random_codeword(h, rng);
    Ok(HelperData {
        kind: HelperKind::CodeOffset,
        payload: bits::xor(r_i.bits(), &c),
        code_ref: code_ref.to_string(),
    })
}

/// `c' = r + h` is decoded to `c`, and `c + h` is returned.
pub fn code_offset_reproduce(r: &Response, helper: &HelperData, decoder: &BitflipDecoder) -> Result<Response> {
    expect_helper(helper, HelperKind::CodeOffset, r.n())?;
    let shifted = bits::xor(r.bits(), &helper.payload);
    let res = decoder.decode(&shifted, None)?;
    if !res.converged {
        return Err(Error::DecodeFailure {
            iterations: res.iterations,
            syndrome_weight: res.syndrome_weight,
        });
    }
    Response::new(bits::xor(&res.word, &helper.payload))
}

pub fn syndrome_enroll(r_i: &Response, h: &SparseBinaryMatrix, code_ref: &str) -> Result<HelperData> {
    Ok(HelperData {
        kind: HelperKind::Syndrome,
        payload: h.syndrome(r_i.bits())?,
        code_ref: code_ref.to_string(),
    })
}

/// `H r^T + h = H e^T` is decoded to an error estimate `e`, and `r + e` is returned.
pub fn syndrome_reproduce(r: &Response, helper: &HelperData, decoder: &BitflipDecoder) -> Result<Response> {
    expect_helper(helper, HelperKind::Syndrome, decoder.matrix().n_rows())?;
    let s = bits::xor(&decoder.matrix().syndrome(r.bits())?, &helper.payload);
    let res = decoder.decode_syndrome(&s, None)?;
    if !res.converged {
        return Err(Error::DecodeFailure {
            iterations: res.iterations,
            syndrome_weight: res.syndrome_weight,
        });
    }
    Response::new(bits::xor(r.bits(), &res.word))
}

fn expect_helper(helper: &HelperData, kind: HelperKind, len: usize) -> Result<()> {
    if helper.kind != kind {
        return Err(Error::InvalidParameter(format!(
            "expected {kind} helper data, got {}",
            helper.kind
        )));
    }
    if helper.payload.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            actual: helper.payload.len(),
        });
    }
    Ok(())
}

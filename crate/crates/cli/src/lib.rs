//! Experiment plumbing behind the `puf-ldpc` binary.
//!
//! An [`ExperimentSpec`] is read from a flat `key=value` file and/or flags,
//! resolved to concrete values and written next to every output it produces,
//! so any output directory can be regenerated from its own config.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use puf_ldpc::decode::BitflipDecoder;
use puf_ldpc::eval::{
    bdd_baseline, block_error_curve, default_i_max, memory_report, write_curves_csv, Curve, CurveConfig, Deltas,
    TailPolicy, DEFAULT_TRIALS,
};
use puf_ldpc::sketch::{
    build_instance_code, default_max_rows, default_sources, format_sources, parse_sources, CodeFile,
    ConstructionConfig, HelperData, Response, SourceSpec,
};
use puf_ldpc::sparsemat::check_regular;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CODE_FILE: &str = "code.txt";
pub const RESPONSE_FILE: &str = "response.txt";
pub const CONSTRUCT_CONFIG: &str = "construct.cfg";
pub const SIMULATE_CONFIG: &str = "simulate.cfg";
pub const CURVE_FILE: &str = "curve.csv";
pub const PERR_FILE: &str = "perr.csv";

/// Exit status 1 for validation errors, 2 for runtime failures.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<puf_ldpc::Error> for CliError {
    fn from(e: puf_ldpc::Error) -> Self {
        use puf_ldpc::Error as E;
        match e {
            E::Io(_) | E::DecodeFailure { .. } | E::Internal(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Analytic bounded-distance baseline `(n, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Baseline {
    pub n: usize,
    pub t: usize,
}

impl Baseline {
    pub fn label(&self) -> String {
        format!("bdd-n{}-t{}", self.n, self.t)
    }
}

impl std::str::FromStr for Baseline {
    type Err = CliError;

    /// `N:T`
    fn from_str(s: &str) -> CliResult<Self> {
        let (n, t) = s.split_once(':').ok_or_else(|| invalid(format!("baseline `{s}` is not N:T")))?;
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| invalid(format!("baseline `{s}` is not N:T")));
        Ok(Baseline { n: parse(n)?, t: parse(t)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub n: usize,
    pub target_k: usize,
    /// `None` selects every construction of length n.
    pub sources: Option<Vec<SourceSpec>>,
    pub seed: u64,
    pub max_rows: Option<usize>,
    pub delta1: Option<u32>,
    pub delta2: Option<u32>,
    pub m_readouts: usize,
    pub p_grid: Vec<f64>,
    pub trials: usize,
    pub i_max: Option<usize>,
    pub tail_policy: TailPolicy,
    pub baselines: Vec<Baseline>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            n: 128,
            target_k: 56,
            sources: None,
            seed: 1,
            max_rows: None,
            delta1: None,
            delta2: None,
            m_readouts: 3,
            p_grid: vec![0.001, 0.005, 0.01, 0.02, 0.05],
            trials: DEFAULT_TRIALS,
            i_max: None,
            tail_policy: TailPolicy::Conservative,
            baselines: Vec::new(),
        }
    }
}

/// Tail probability at the largest grid point below which weights are not simulated.
const I_MAX_TAIL: f64 = 1e-9;

impl ExperimentSpec {
    /// Parses `key=value` lines on top of the defaults. Blank lines and `#`
    /// comments are skipped; unknown keys are errors.
    pub fn from_config(text: &str) -> CliResult<Self> {
        let mut spec = ExperimentSpec::default();
        for (no, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| invalid(format!("config line {}: expected key=value", no + 1)))?;
            spec.set(k.trim(), v.trim())
                .map_err(|e| invalid(format!("config line {}: {e}", no + 1)))?;
        }
        Ok(spec)
    }

    pub fn from_config_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_config(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
            v.parse().map_err(|_| invalid(format!("`{key}`: cannot parse `{v}`")))
        }
        fn auto<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<Option<T>> {
            if v == "auto" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        match key {
            "n" => self.n = num(key, value)?,
            "target_k" => self.target_k = num(key, value)?,
            "sources" => {
                self.sources = if value == "auto" {
                    None
                } else {
                    Some(parse_sources(value)?)
                }
            }
            "seed" => self.seed = num(key, value)?,
            "max_rows" => self.max_rows = auto(key, value)?,
            "delta1" => self.delta1 = auto(key, value)?,
            "delta2" => self.delta2 = auto(key, value)?,
            "m_readouts" => self.m_readouts = num(key, value)?,
            "p_grid" => {
                self.p_grid = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| num(key, s.trim()))
                    .collect::<CliResult<_>>()?
            }
            "trials" => self.trials = num(key, value)?,
            "i_max" => self.i_max = auto(key, value)?,
            "tail_policy" => self.tail_policy = value.parse()?,
            "baseline" => {
                self.baselines = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<CliResult<_>>()?
            }
            other => return Err(invalid(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.n < 2 {
            return Err(invalid("n must be at least 2"));
        }
        if self.target_k == 0 || self.target_k >= self.n {
            return Err(invalid(format!("target_k must satisfy 0 < k < n = {}", self.n)));
        }
        if self.m_readouts == 0 {
            return Err(invalid("m_readouts must be at least 1"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.p_grid.is_empty() {
            return Err(invalid("p_grid is empty"));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(0.0..=0.5).contains(*p)) {
            return Err(invalid(format!("p = {p} outside [0, 0.5]")));
        }
        if let Some(i) = self.i_max.filter(|&i| i > self.n) {
            return Err(invalid(format!("i_max = {i} exceeds n = {}", self.n)));
        }
        if let Some(b) = self.baselines.iter().find(|b| b.t > b.n) {
            return Err(invalid(format!("baseline t = {} exceeds n = {}", b.t, b.n)));
        }
        let d = self.deltas();
        if !(d.delta1 > d.delta2 && d.delta2 > 0) {
            return Err(invalid(format!("need delta1 > delta2 > 0, got {} and {}", d.delta1, d.delta2)));
        }
        Ok(())
    }

    pub fn deltas(&self) -> Deltas {
        let d = Deltas::for_length(self.n);
        Deltas {
            delta1: self.delta1.unwrap_or(d.delta1),
            delta2: self.delta2.unwrap_or(d.delta2),
        }
    }

    pub fn i_max(&self) -> usize {
        self.i_max.unwrap_or_else(|| default_i_max(self.n, &self.p_grid, I_MAX_TAIL))
    }

    pub fn construction(&self) -> ConstructionConfig {
        let sources = self.sources.clone().unwrap_or_else(|| default_sources(self.n));
        let mut cfg = ConstructionConfig::with_sources(self.n, self.target_k, sources, self.seed);
        cfg.max_rows = self.max_rows.unwrap_or_else(|| default_max_rows(self.n, self.target_k));
        cfg.balance_rows = cfg.max_rows / 4;
        cfg
    }

    /// Every `auto` replaced by the value it resolves to.
    pub fn resolved(&self) -> Self {
        let d = self.deltas();
        ExperimentSpec {
            sources: Some(self.construction().sources),
            max_rows: Some(self.construction().max_rows),
            delta1: Some(d.delta1),
            delta2: Some(d.delta2),
            i_max: Some(self.i_max()),
            ..self.clone()
        }
    }

    /// Flat `key=value` text in a fixed key order.
    pub fn to_config(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
        }
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("n", self.n.to_string());
        kv("target_k", self.target_k.to_string());
        kv("sources", self.sources.as_ref().map_or_else(|| "auto".into(), |s| format_sources(s)));
        kv("seed", self.seed.to_string());
        kv("max_rows", opt(&self.max_rows));
        kv("delta1", opt(&self.delta1));
        kv("delta2", opt(&self.delta2));
        kv("m_readouts", self.m_readouts.to_string());
        kv("p_grid", join(self.p_grid.iter().map(f64::to_string).collect()));
        kv("trials", self.trials.to_string());
        kv("i_max", opt(&self.i_max));
        kv("tail_policy", self.tail_policy.to_string());
        kv("baseline", join(self.baselines.iter().map(|b| format!("{}:{}", b.n, b.t)).collect()));
        out
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        CliError::Runtime(format!("cannot create {}: {e}", path.display()))
    })?))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).map_err(|e| invalid(format!("cannot open {}: {e}", path.display())))?,
    ))
}

fn write_config(path: &Path, spec: &ExperimentSpec) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_all(spec.resolved().to_config().as_bytes())?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ConstructSummary {
    pub n: usize,
    pub k: usize,
    pub target_k: usize,
    pub rows: usize,
    pub density: f64,
    pub col_weight_spread: usize,
    pub code_path: PathBuf,
    pub degenerate_response: bool,
}

impl fmt::Display for ConstructSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "k={}", self.k)?;
        writeln!(f, "rows={}", self.rows)?;
        writeln!(f, "density={:.6}", self.density)?;
        writeln!(f, "col_weight_spread={}", self.col_weight_spread)?;
        if self.degenerate_response {
            writeln!(f, "warning: all-zero response lies in every linear code")?;
        }
        write!(f, "wrote {}", self.code_path.display())
    }
}

/// Builds the instance code for a seeded random response, or for the one in
/// `response`, and writes code, response and config into `out_dir`.
///
/// The files are written even when the target dimension is missed; the
/// error then reports the achieved dimension.
pub fn cmd_construct(spec: &ExperimentSpec, response: Option<&Path>, out_dir: &Path) -> CliResult<ConstructSummary> {
    spec.validate()?;
    let r_i = match response {
        Some(path) => {
            let r = Response::read_from(open(path)?)?;
            if r.n() != spec.n {
                return Err(invalid(format!("response has length {}, expected n = {}", r.n(), spec.n)));
            }
            r
        }
        None => Response::random(spec.n, &mut ChaCha8Rng::seed_from_u64(spec.seed)),
    };
    let cfg = spec.construction();
    let code = build_instance_code(&r_i, &cfg)?;

    fs::create_dir_all(out_dir)?;
    let code_path = out_dir.join(CODE_FILE);
    let mut w = create(&code_path)?;
    code.write_to(&mut w)?;
    w.flush()?;
    let mut w = create(&out_dir.join(RESPONSE_FILE))?;
    r_i.write_to(&mut w)?;
    w.flush()?;
    write_config(&out_dir.join(CONSTRUCT_CONFIG), spec)?;

    if !code.target_reached() {
        return Err(CliError::Runtime(format!(
            "target dimension {} unreachable with sources {}: achieved k = {}",
            spec.target_k,
            format_sources(&cfg.sources),
            code.k
        )));
    }
    let stats = code.h.stats();
    Ok(ConstructSummary {
        n: code.n,
        k: code.k,
        target_k: spec.target_k,
        rows: code.h.n_rows(),
        density: stats.density,
        col_weight_spread: stats.col_weight_spread(),
        code_path,
        degenerate_response: code.degenerate_response,
    })
}

/// Runs the block error curve for an existing code and writes `curve.csv`,
/// `perr.csv` and the config into `out_dir`.
pub fn cmd_simulate(spec: &ExperimentSpec, code: &Path, response: &Path, out_dir: &Path) -> CliResult<PathBuf> {
    let file = CodeFile::read_from(open(code)?)?;
    let r_i = Response::read_from(open(response)?)?;
    if r_i.n() != file.n() {
        return Err(invalid(format!(
            "response length {} does not match code length {}",
            r_i.n(),
            file.n()
        )));
    }
    let mut spec = spec.clone();
    spec.n = file.n();
    if let Some(k) = file.get::<usize>("k") {
        spec.target_k = k.clamp(1, spec.n - 1);
    }
    spec.validate()?;
    if !file.h.is_codeword(r_i.bits())? {
        return Err(invalid("response is not a codeword of the given code"));
    }

    let decoder = BitflipDecoder::new(file.h.clone());
    let cfg = CurveConfig {
        p_grid: spec.p_grid.clone(),
        i_max: spec.i_max(),
        trials: spec.trials,
        tail_policy: spec.tail_policy,
        m: spec.m_readouts,
        deltas: spec.deltas(),
        seed: spec.seed,
    };
    let report = block_error_curve(&decoder, &r_i, &cfg)?;

    let mut curves = vec![Curve {
        source: "instance".into(),
        points: report.curve.clone(),
    }];
    for b in &spec.baselines {
        curves.push(Curve {
            source: b.label(),
            points: bdd_baseline(b.n, b.t, &spec.p_grid)?,
        });
    }
    fs::create_dir_all(out_dir)?;
    let curve_path = out_dir.join(CURVE_FILE);
    let mut w = create(&curve_path)?;
    write_curves_csv(&mut w, &curves)?;
    w.flush()?;
    let mut w = create(&out_dir.join(PERR_FILE))?;
    report.write_weights_csv(&mut w)?;
    w.flush()?;
    write_config(&out_dir.join(SIMULATE_CONFIG), &spec)?;
    Ok(curve_path)
}

/// Memory table plus regularity summary for a code file.
pub fn cmd_report(code: &Path, helper: Option<&Path>) -> CliResult<String> {
    let file = CodeFile::read_from(open(code)?)?;
    if file.h.n_rows() == 0 || file.h.nnz() == 0 {
        return Err(invalid(format!("{}: matrix has no nonzero entries", code.display())));
    }
    let helper = helper.map(|p| HelperData::read_from(open(p)?).map_err(CliError::from)).transpose()?;
    let mem = memory_report(&file.h, helper.as_ref());
    let stats = file.h.stats();
    let reg = check_regular(&file.h);

    let mut out = String::new();
    use fmt::Write as _;
    let _ = writeln!(out, "matrix {} x {}, {} ones, rank {}", stats.n_rows, stats.n_cols, stats.nnz, stats.rank);
    let _ = writeln!(out, "stored pairs: {}", mem.ones);
    let _ = write!(out, "{mem}");
    let hist = |h: &std::collections::BTreeMap<usize, usize>| {
        h.iter().map(|(w, c)| format!("{w}:{c}")).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "row weights (weight:count): {}", hist(&stats.row_weights));
    let _ = writeln!(out, "column weights (weight:count): {}", hist(&stats.col_weights));
    match reg.violation() {
        None => {
            let _ = writeln!(out, "regularity: ok");
        }
        Some(v) => {
            let _ = writeln!(out, "regularity: not regular ({v})");
        }
    }
    Ok(out)
}

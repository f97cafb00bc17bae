use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use puf_ldpc_cli::{
    cmd_construct, cmd_report, cmd_simulate, CliError, CliResult, ExperimentSpec, CODE_FILE, RESPONSE_FILE,
};

#[derive(Parser)]
#[command(name = "puf-ldpc", version, about = "Per-response LDPC codes for PUF error correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an instance code for a random or given response.
    Construct {
        #[command(flatten)]
        spec: SpecArgs,
        /// Response file (`n=` and `bits=` lines) instead of a seeded random one.
        #[arg(long)]
        response: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Estimate the block error curve of an existing code.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        /// Directory produced by `construct`.
        #[arg(long, conflicts_with = "code")]
        from: Option<PathBuf>,
        #[arg(long)]
        code: Option<PathBuf>,
        #[arg(long)]
        response: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Storage accounting and regularity check for a code file.
    Report {
        code: PathBuf,
        #[arg(long)]
        helper: Option<PathBuf>,
    },
}

/// Flags override values from `--config`.
#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "k")]
    target_k: Option<String>,
    /// Comma-separated, e.g. `rs:16:8:16,eg:7:2`, or `auto`.
    #[arg(long)]
    sources: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    max_rows: Option<String>,
    #[arg(long)]
    delta1: Option<String>,
    #[arg(long)]
    delta2: Option<String>,
    #[arg(long = "m")]
    m_readouts: Option<String>,
    /// Comma-separated crossover probabilities.
    #[arg(long)]
    p_grid: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    i_max: Option<String>,
    /// `conservative` or `truncated`.
    #[arg(long = "tail")]
    tail_policy: Option<String>,
    /// Comma-separated `N:T` pairs.
    #[arg(long)]
    baseline: Option<String>,
}

impl SpecArgs {
    fn resolve(&self) -> CliResult<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_config_file(path)?,
            None => ExperimentSpec::default(),
        };
        let flags = [
            ("n", &self.n),
            ("target_k", &self.target_k),
            ("sources", &self.sources),
            ("seed", &self.seed),
            ("max_rows", &self.max_rows),
            ("delta1", &self.delta1),
            ("delta2", &self.delta2),
            ("m_readouts", &self.m_readouts),
            ("p_grid", &self.p_grid),
            ("trials", &self.trials),
            ("i_max", &self.i_max),
            ("tail_policy", &self.tail_policy),
            ("baseline", &self.baseline),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.set(key, v)?;
            }
        }
        Ok(spec)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Construct { spec, response, out } => {
            let summary = cmd_construct(&spec.resolve()?, response.as_deref(), &out)?;
            println!("{summary}");
        }
        Command::Simulate {
            spec,
            from,
            code,
            response,
            out,
        } => {
            let spec = spec.resolve()?;
            let code = code
                .or_else(|| from.as_ref().map(|d| d.join(CODE_FILE)))
                .ok_or_else(|| CliError::Validation("give --code or --from".into()))?;
            let response = response
                .or_else(|| from.as_ref().map(|d| d.join(RESPONSE_FILE)))
                .or_else(|| code.parent().map(|d| d.join(RESPONSE_FILE)))
                .ok_or_else(|| CliError::Validation("give --response".into()))?;
            let path = cmd_simulate(&spec, &code, &response, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Report { code, helper } => {
            print!("{}", cmd_report(&code, helper.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

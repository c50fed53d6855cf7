//! `flexreg`: classify exponent sequences, evaluate proximal operators,
//! solve variable-exponent regularization problems, and run
//! convergence-rate sweeps, all driven by JSON configs.
//!
//! Exit codes: 0 on success, 1 on a domain error (bad regime, dimension
//! mismatch, solver failure) with a one-line JSON object on stderr, 2 on
//! malformed configuration or I/O failure. The environment variable
//! `FLEXREG_SEED` overrides every seed found in a config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use flexreg::error::Error;
use flexreg::io::{ClassificationJson, ProblemJson, ProxJson, RatesJson, ReportJson};
use flexreg::{
    emit_report, prox_scalar, run_convex_rate_sweep, run_nonconvex_rate_sweep, solve,
    ExponentSequence, RateConfig, ReportFormat, SolveConfig,
};

#[derive(Parser)]
#[command(name = "flexreg", version, about = "Sparse regularization with variable exponents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the sequence space of an exponent family equals l1.
    Classify {
        /// Family: "1+1/k", "1+1/log(k)", "1+1/log(k)^<alpha>", "const:<p>".
        #[arg(long)]
        family: String,
        /// Index the family starts at (log families default to 2).
        #[arg(long)]
        offset: Option<usize>,
        /// Output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the scalar proximal operator of alpha |u|^p at t.
    Prox {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a regularization problem described by a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a convergence-rate sweep described by a JSON config.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = match &err {
                Error::Parse(_) | Error::Io(_) => (2, "config"),
                _ => (1, "domain"),
            };
            eprintln!(
                "{}",
                serde_json::json!({ "error": err.to_string(), "kind": kind })
            );
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Classify {
            family,
            offset,
            out,
        } => {
            let mut seq = parse_family(&family)?;
            if let Some(o) = offset {
                seq = seq.with_offset(o)?;
            }
            let classification = if seq.inf_p() >= 1.0 {
                seq.classify_superlinear()?
            } else {
                seq.classify_sublinear()?
            };
            let wire = ClassificationJson::from_classification(&classification);
            write_output(out, &to_json_line(&wire)?)
        }
        Command::Prox { t, alpha, p, out } => {
            let result = prox_scalar(t, alpha, p)?;
            let wire = ProxJson::from_result(&result);
            write_output(out, &to_json_line(&wire)?)
        }
        Command::Solve { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let wire: ProblemJson =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let mut cfg: SolveConfig<f64> = wire.to_config()?;
            if let Some(seed) = env_seed()? {
                cfg.seed = seed;
            }
            let report = solve(&cfg)?;
            let wire = ReportJson::from_report(&report);
            let mut text = serde_json::to_string_pretty(&wire)
                .map_err(|e| Error::Parse(e.to_string()))?;
            text.push('\n');
            write_output(out, &text)
        }
        Command::Rates {
            config,
            out,
            format,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let wire: RatesJson =
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let mut cfg: RateConfig<f64> = wire.to_config()?;
            if let Some(seed) = env_seed()? {
                cfg.noise_seed = seed;
                cfg.solver.seed = seed;
            }
            let n = cfg.operator.domain_dim();
            let (lo, hi) = cfg.exponents.range_on(n);
            let records = if lo > 1.0 {
                run_convex_rate_sweep(&cfg)?
            } else if hi <= 1.0 {
                run_nonconvex_rate_sweep(&cfg)?
            } else {
                return Err(Error::ExponentRegime(format!(
                    "exponent range [{lo}, {hi}] fits neither sweep regime"
                )));
            };
            let fmt = match format {
                OutputFormat::Csv => ReportFormat::Csv,
                OutputFormat::Json => ReportFormat::Json,
            };
            let mut buf = Vec::new();
            emit_report(&records, fmt, &mut buf)?;
            let text = String::from_utf8(buf)
                .map_err(|e| Error::Parse(format!("non-utf8 report: {e}")))?;
            write_output(out, &text)
        }
    }
}

/// Parses the classify-flag family notation; anything unrecognized is a
/// configuration error (exit 2).
fn parse_family(s: &str) -> Result<ExponentSequence<f64>, Error> {
    if s == "1+1/k" {
        return Ok(ExponentSequence::one_plus_inv_k());
    }
    if s == "1+1/log(k)" {
        return Ok(ExponentSequence::one_plus_inv_log_k());
    }
    if let Some(rest) = s.strip_prefix("1+1/log(k)^") {
        let alpha: f64 = rest
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent in family '{s}'")))?;
        return ExponentSequence::one_plus_inv_log_k_alpha(alpha);
    }
    if let Some(rest) = s.strip_prefix("const:") {
        let p: f64 = rest
            .parse()
            .map_err(|_| Error::Parse(format!("bad constant in family '{s}'")))?;
        return ExponentSequence::constant(p);
    }
    Err(Error::Parse(format!("unknown family '{s}'")))
}

/// `FLEXREG_SEED`, when set, overrides every config seed.
fn env_seed() -> Result<Option<u64>, Error> {
    match std::env::var("FLEXREG_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| Error::Parse(format!("FLEXREG_SEED is not a u64: '{text}'"))),
        Err(_) => Ok(None),
    }
}

fn to_json_line<S: serde::Serialize>(value: &S) -> Result<String, Error> {
    let mut text = serde_json::to_string(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn write_output(out: Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

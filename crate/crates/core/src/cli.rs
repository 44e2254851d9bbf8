//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 infeasible or incapable
//! channel, 64 usage error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::channel::SchmidtChannel;
use crate::explorer::{
    bounds_grid, bounds_table, format_number, linspace, sweep_case1, sweep_case2, sweep_degenerate, write_bounds_csv,
    SweepOutput,
};
use crate::resources::{resource_report, ResourceReport};
use crate::scheme::{AdmissibleRange, FreeAngle, Scheme, SchemeError, SchemeParams};
use crate::teleport::{run_teleport, InputQubit, TeleportError, TeleportReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Accepted deviation of Σa² from 1 for channels given on the command line.
pub const CHANNEL_INPUT_TOLERANCE: f64 = 5e-3;

pub const SEED_ENV: &str = "TELEPORTSIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "teleportsim", version, about = "Perfect qubit teleportation through two-qutrit channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random inputs; defaults to $TELEPORTSIM_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points per axis.
    #[arg(long, global = true)]
    density: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SchemeChoice {
    /// Schmidt coefficients a0,a1,a2.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    channel: [f64; 3],
    /// Free rotation angle θ₃ (canonical frame).
    #[arg(long, conflicts_with = "theta2", allow_hyphen_values = true)]
    theta3: Option<f64>,
    /// Free rotation angle θ₂ (canonical frame).
    #[arg(long, allow_hyphen_values = true)]
    theta2: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scheme for one channel and teleport a seeded random qubit.
    Verify(SchemeChoice),
    /// Sweep channels with a₁ = a₂.
    SweepCase1,
    /// Sweep channels with a₁² = 1/2.
    SweepCase2,
    /// Sweep the a₀ = 0 family over θ₁ ∈ [0, π/2].
    SweepDegenerate,
    /// Tabulate the lower and upper bounds over E ∈ [1, log₂3].
    Bounds,
    /// Resource report for one channel and scheme.
    Report(SchemeChoice),
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) | CliError::Csv(_) => EXIT_VALIDATION,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::Incapable { .. } | SchemeError::Infeasible { .. } | SchemeError::TriangleViolation { .. } => {
                CliError::Infeasible(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TeleportError> for CliError {
    fn from(e: TeleportError) -> Self {
        match e {
            TeleportError::Incapable { .. } => CliError::Infeasible(e.to_string()),
            TeleportError::Scheme(s) => s.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {}", parts.len()));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    channel: &'a SchmidtChannel<f64>,
    canonical_order: [usize; 3],
    params: &'a SchemeParams<f64>,
    admissible: Option<&'a AdmissibleRange<f64>>,
    seed: u64,
    input: InputQubit<f64>,
    teleport: TeleportReport<f64>,
}

#[derive(Serialize)]
struct ReportOutput<'a> {
    channel: &'a SchmidtChannel<f64>,
    params: &'a SchemeParams<f64>,
    resources: ResourceReport<f64>,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn build_scheme(choice: &SchemeChoice) -> Result<Scheme<f64>, CliError> {
    let ch = SchmidtChannel::normalized_from(choice.channel, CHANNEL_INPUT_TOLERANCE)
        .map_err(|e| CliError::Validation(format!("invalid channel: {e}")))?;
    let free = match (choice.theta3, choice.theta2) {
        (Some(t), _) => FreeAngle::Theta3(t),
        (None, Some(t)) => FreeAngle::Theta2(t),
        (None, None) => FreeAngle::Midpoint,
    };
    Ok(Scheme::solve(&ch, free)?)
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<S: Serialize>(value: &S, w: &mut dyn Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
    writeln!(w)?;
    Ok(())
}

fn emit_sweep(out: &SweepOutput<f64>, format: Format, w: &mut dyn Write) -> Result<(), CliError> {
    match format {
        Format::Csv => out.write_csv(w)?,
        Format::Json => {
            out.write_json(&mut *w)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    let seed = resolve_seed(common.seed)?;
    if common.density.is_some_and(|d| d < 2) {
        return Err(CliError::Validation("--density must be at least 2".into()));
    }
    match &cli.command {
        Command::Verify(choice) => {
            let scheme = build_scheme(choice)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let input = InputQubit::haar_random(&mut rng);
            let report = run_teleport(&input, scheme.channel(), scheme.params())?;
            let mut w = writer(&common.out)?;
            match common.format {
                Format::Json => write_json(
                    &VerifyOutput {
                        channel: scheme.channel(),
                        canonical_order: scheme.permutation().perm,
                        params: scheme.params(),
                        admissible: scheme.admissible(),
                        seed,
                        input,
                        teleport: report,
                    },
                    &mut w,
                )?,
                Format::Csv => {
                    let mut c = csv::Writer::from_writer(&mut w);
                    c.write_record(["label", "probability", "fidelity"])?;
                    for b in &report.branches {
                        c.write_record([b.label.to_string(), format_number(b.probability), format_number(b.fidelity)])?;
                    }
                    c.flush()?;
                }
            }
            w.flush()?;
        }
        Command::Report(choice) => {
            let scheme = build_scheme(choice)?;
            let resources = resource_report(scheme.channel(), scheme.params())
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let mut w = writer(&common.out)?;
            match common.format {
                Format::Json => write_json(
                    &ReportOutput {
                        channel: scheme.channel(),
                        params: scheme.params(),
                        resources,
                    },
                    &mut w,
                )?,
                Format::Csv => {
                    let mut c = csv::Writer::from_writer(&mut w);
                    c.write_record(["e_channel", "e12", "h12", "sum"])?;
                    c.write_record([resources.e_channel, resources.e12, resources.h12, resources.sum].map(format_number))?;
                    c.flush()?;
                }
            }
            w.flush()?;
        }
        Command::SweepCase1 => {
            let out = sweep_case1::<f64>(common.density.unwrap_or(200), seed);
            let mut w = writer(&common.out)?;
            emit_sweep(&out, common.format, &mut w)?;
            w.flush()?;
        }
        Command::SweepCase2 => {
            let out = sweep_case2::<f64>(common.density.unwrap_or(200), seed);
            let mut w = writer(&common.out)?;
            emit_sweep(&out, common.format, &mut w)?;
            w.flush()?;
        }
        Command::SweepDegenerate => {
            let grid = linspace(0.0, std::f64::consts::FRAC_PI_2, common.density.unwrap_or(181));
            let out = sweep_degenerate(&grid, seed)?;
            let mut w = writer(&common.out)?;
            emit_sweep(&out, common.format, &mut w)?;
            w.flush()?;
        }
        Command::Bounds => {
            let rows = bounds_table(&bounds_grid::<f64>(common.density.unwrap_or(100)));
            let mut w = writer(&common.out)?;
            match common.format {
                Format::Csv => write_bounds_csv(&rows, &mut w)?,
                Format::Json => write_json(&rows, &mut w)?,
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_to_string(args: &[&str]) -> (i32, String) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out");
        let mut argv = vec!["teleportsim"];
        argv.extend_from_slice(args);
        let p = path.to_str().unwrap().to_owned();
        argv.extend_from_slice(&["--out", &p]);
        let code = run(argv);
        let text = std::fs::read_to_string(&path).unwrap_or_default();
        (code, text)
    }

    #[test]
    fn triple_parsing() {
        assert_eq!(parse_triple("0.1, 0.2,0.3").unwrap(), [0.1, 0.2, 0.3]);
        assert!(parse_triple("0.1,0.2").is_err());
        assert!(parse_triple("a,b,c").is_err());
    }

    #[test]
    fn verify_symmetric_channel_default() {
        let (code, text) = run_to_string(&["verify", "--channel", "0.577,0.577,0.577", "--seed", "1"]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["teleport"]["min_fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
    }

    #[test]
    fn verify_symmetric_channel_outside_range() {
        let (code, _) = run_to_string(&["verify", "--channel", "0.577,0.577,0.577", "--theta3", "0.3", "--seed", "1"]);
        assert_eq!(code, EXIT_INFEASIBLE);
    }

    #[test]
    fn verify_incapable_channel() {
        let (code, _) = run_to_string(&["verify", "--channel", "0.775,0.447,0.447"]);
        assert_eq!(code, EXIT_INFEASIBLE);
    }

    #[test]
    fn verify_rejects_unnormalized() {
        let (code, _) = run_to_string(&["verify", "--channel", "0.5,0.5,0.5"]);
        assert_eq!(code, EXIT_VALIDATION);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["teleportsim", "bounds", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["teleportsim", "nosuch"]), EXIT_USAGE);
    }

    #[test]
    fn bounds_csv_rows() {
        let (code, text) = run_to_string(&["bounds", "--density", "100", "--format", "csv"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(text.lines().count(), 101);
        assert_eq!(text.lines().next().unwrap(), "E,lower,upper");
    }

    #[test]
    fn report_degenerate_channel() {
        let (code, text) = run_to_string(&["report", "--channel", "0,0.7071067811865476,0.7071067811865476", "--theta2", "0"]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["resources"]["sum"].as_f64().unwrap() >= 3.0 - 1e-9);
    }
}

//! Command-line driver for the heralded hybrid entanglement engine:
//! single-point metric evaluation, parameter sweeps, DV-block Wigner
//! tomography and oracle verification against pinned values.

mod blocks;
mod config;
mod point;
mod sweep;
mod verify;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hybrid_fock::FockError;

use crate::blocks::BasisArg;
use crate::config::{default_out_dir, Format, Overrides};

/// CLI failure modes. Usage and I/O problems exit 1; truncation or
/// quadrature convergence failures exit 3. Verification failures exit 2
/// from the verify command itself.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Engine(FockError),
    Io(std::io::Error),
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        CliError::Engine(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Engine(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Engine(FockError::TruncationInsufficient { .. })
            | CliError::Engine(FockError::QuadratureNotConverged { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hybrid-fock",
    version,
    about = "Heralded hybrid entanglement: metrics, sweeps, block tomography, verification"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the requested metrics at a single parameter point.
    Run(RunArgs),
    /// Sweep one parameter and write a CSV or JSON table.
    Sweep(SweepArgs),
    /// Write a Wigner map per DV block plus an index manifest.
    Blocks(BlocksArgs),
    /// Check closed forms and the engine against pinned values.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Sweep axis: a parameter name, optionally with a range (name=start:stop).
    #[arg(long)]
    sweep: Option<String>,
    /// Number of sweep points, endpoints included.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct BlocksArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// DV basis for the block decomposition.
    #[arg(long, value_enum, default_value = "number")]
    basis: BasisArg,
    /// Phase-space half-width; the grid spans [-grid-max, grid-max].
    #[arg(long, default_value_t = 4.0)]
    grid_max: f64,
    /// Points per phase-space axis.
    #[arg(long, default_value_t = 81)]
    grid_points: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Tolerance override applied to every check (0 exposes each raw deviation).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Run a single check by id.
    #[arg(long)]
    only: Option<String>,
    /// List check ids and exit.
    #[arg(long)]
    list: bool,
}

fn write_table(
    result: &sweep::SweepResult,
    format: Format,
    path: &Path,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    match format {
        Format::Csv => {
            let mut file = std::fs::File::create(path)?;
            sweep::write_csv(result, &mut file)?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&sweep::to_json(result))
                .expect("json value serializes");
            std::fs::write(path, text + "\n")?;
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<u8, CliError> {
    let resolved = config::resolve(&args.overrides)?;
    let result = sweep::run_point(&resolved.point, &resolved.metrics)?;
    let row = &result.rows[0];
    for (id, value) in result.metric_ids.iter().zip(&row.metrics) {
        println!("{id} = {value}");
    }
    match row.prob {
        Some(p) => println!("herald-prob = {p}"),
        None => println!("herald-prob = nan"),
    }
    println!("converged = {}", row.converged);
    if let Some(path) = &resolved.out {
        write_table(&result, resolved.format, path)?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, CliError> {
    let resolved = config::resolve(&args.overrides)?;
    let spec = sweep::resolve_sweep(&resolved.sweep, args.sweep.as_deref(), args.steps)?;
    let result = sweep::run_sweep(&resolved.point, &resolved.metrics, &spec)?;
    let path: PathBuf = resolved.out.clone().unwrap_or_else(|| {
        default_out_dir().join(format!(
            "sweep-{}-{}.{}",
            resolved.point.scheme.id(),
            spec.param.id(),
            resolved.format.extension()
        ))
    });
    write_table(&result, resolved.format, &path)?;
    println!("wrote {} ({} rows)", path.display(), result.rows.len());
    Ok(0)
}

fn cmd_blocks(args: BlocksArgs) -> Result<u8, CliError> {
    let resolved = config::resolve(&args.overrides)?;
    let grid = hybrid_fock::metrics::GridSpec::new(-args.grid_max, args.grid_max, args.grid_points)?;
    let dir: PathBuf = resolved
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir().join(format!("blocks-{}", resolved.point.scheme.id())));
    let (count, leakage) = blocks::emit_blocks(&resolved.point, args.basis, &grid, &dir)?;
    println!(
        "wrote {count} block maps and index.json to {} (DV leakage {leakage:.3e})",
        dir.display()
    );
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Blocks(args) => cmd_blocks(args),
        Cmd::Verify(args) => verify::run_verify(args.tolerance, args.only.as_deref(), args.list),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

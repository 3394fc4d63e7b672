//! `hball`: run one verification experiment from a JSON config and write
//! its report.
//!
//! Exit status: 0 when every row passes, 1 when any row disagrees, 2 when
//! the only problems are inconclusive rows, 3 for usage, config and I/O
//! errors.

use std::env::{self, VarError};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use hball::experiments::{
    run_distance, run_identities, run_inclusion, run_kernel_growth, run_levelset, run_membership, DistanceConfig,
    Experiment, ExperimentReport, FamilyConfig, GrowthConfig, HasOutcome, IdentityConfig, LevelsetConfig,
    MembershipConfig, Summary,
};

const USAGE_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "hball", version, about = "Numerical checks for harmonic Bergman-Besov and Bloch spaces on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Growth regime of weighted kernel integrals as the point nears the sphere
    KernelGrowth(RunArgs),
    /// Kernel-atom membership predicate against shell-summed norms
    Membership(RunArgs),
    /// Little Bloch verdicts over the test-function family
    Inclusion(RunArgs),
    /// Level-set finiteness against the little Bloch verdict
    Levelset(RunArgs),
    /// Level-set distance to the little Bloch space for two exponents
    Distance(RunArgs),
    /// Coefficient identities of the radial operators and the reproducing formula
    VerifyIdentities(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; absent fields take their defaults
    #[arg(long)]
    config: PathBuf,
    /// Report destination
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Shell depth; for kernel-growth the last radius index
    #[arg(long, value_name = "J")]
    shells: Option<usize>,
    /// kernel-growth: relative kernel truncation; verify-identities: identity tolerance
    #[arg(long, value_name = "T")]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn configure_threads() -> Result<()> {
    let n = match env::var("HBALL_THREADS") {
        Ok(v) => v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| anyhow!("HBALL_THREADS must be a positive integer, got {v:?}"))?,
        Err(VarError::NotPresent) => return Ok(()),
        Err(e) => bail!("HBALL_THREADS: {e}"),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("setting up the thread pool")?;
    Ok(())
}

fn read_config<C: DeserializeOwned>(path: &Path) -> Result<C> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn reject(flag: &str, value: Option<impl Sized>, experiment: Experiment) -> Result<()> {
    if value.is_some() {
        bail!("--{flag} does not apply to {}", experiment.name());
    }
    Ok(())
}

fn emit<C, R>(report: hball::Result<ExperimentReport<C, R>>, args: &RunArgs) -> Result<Summary>
where
    C: Serialize,
    R: Serialize + HasOutcome,
{
    let report = report?;
    let text = match args.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
    };
    fs::write(&args.out, text).with_context(|| format!("writing {}", args.out.display()))?;
    let s = report.summary;
    eprintln!(
        "{}: {} rows, {} passed, {} failed, {} inconclusive",
        report.experiment.name(),
        s.total,
        s.passed,
        s.failed,
        s.inconclusive
    );
    Ok(s)
}

fn run(command: Command) -> Result<Summary> {
    use Experiment as E;
    match command {
        Command::KernelGrowth(a) => {
            let mut cfg: GrowthConfig = read_config(&a.config)?;
            if let Some(j) = a.shells {
                cfg.j_max = j;
            }
            if let Some(t) = a.tol {
                cfg.tol = t;
            }
            emit(run_kernel_growth(&cfg), &a)
        }
        Command::Membership(a) => {
            reject("tol", a.tol, E::Membership)?;
            let mut cfg: MembershipConfig = read_config(&a.config)?;
            if let Some(j) = a.shells {
                cfg.shells = j;
            }
            emit(run_membership(&cfg), &a)
        }
        Command::Inclusion(a) => {
            reject("tol", a.tol, E::Inclusion)?;
            let mut cfg: FamilyConfig = read_config(&a.config)?;
            if let Some(j) = a.shells {
                cfg.shells = j;
            }
            emit(run_inclusion(&cfg), &a)
        }
        Command::Levelset(a) => {
            reject("tol", a.tol, E::Levelset)?;
            let mut cfg: LevelsetConfig = read_config(&a.config)?;
            if let Some(j) = a.shells {
                cfg.shells = j;
            }
            emit(run_levelset(&cfg), &a)
        }
        Command::Distance(a) => {
            reject("tol", a.tol, E::Distance)?;
            let mut cfg: DistanceConfig = read_config(&a.config)?;
            if let Some(j) = a.shells {
                cfg.shells = j;
            }
            emit(run_distance(&cfg), &a)
        }
        Command::VerifyIdentities(a) => {
            reject("shells", a.shells, E::VerifyIdentities)?;
            let mut cfg: IdentityConfig = read_config(&a.config)?;
            if let Some(t) = a.tol {
                cfg.tol = t;
            }
            emit(run_identities(&cfg), &a)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| run(cli.command));
    match result {
        Ok(summary) => ExitCode::from(summary.exit_code() as u8),
        Err(e) => {
            eprintln!("hball: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}

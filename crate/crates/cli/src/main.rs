//! `jointdp`: run the private equilibrium mechanisms, verify their outputs,
//! probe incentives and privacy, and sweep experiments.

mod commands;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use jointdp::equilibria::Concept;
use jointdp::experiment::Format;
use jointdp::noregret::Family;
use jointdp::pbr::InitPolicy;

#[derive(Parser, Debug)]
#[command(name = "jointdp", version, about = "Approximate equilibria of large games under joint differential privacy")]
struct Cli {
    /// Master seed; every random draw of the run derives from it. Defaults
    /// to 0, or to the config's own seed for `experiment`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: one per core). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Record wall-clock times in experiment rows (breaks byte-reproducibility).
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Private best-response dynamics on a congestion game.
    Pbr(PbrArgs),
    /// Laplace-perturbed no-regret dynamics on a large game.
    Nrlaplace(NrArgs),
    /// Check run records against an equilibrium concept.
    Verify(VerifyArgs),
    /// Search a player's deviations in a mediated game.
    Incentives(IncentivesArgs),
    /// Privacy evidence for a mechanism under a one-player type swap.
    Audit(AuditArgs),
    /// Run a configured sweep and emit one row per (cell, trial).
    Experiment(ExperimentArgs),
}

/// `c_alpha` is a positive number or `auto` (smallest feasible constant).
#[derive(Debug, Clone, Copy)]
pub enum CAlpha {
    Auto,
    Value(f64),
}

fn parse_c_alpha(s: &str) -> Result<CAlpha, String> {
    if s == "auto" {
        return Ok(CAlpha::Auto);
    }
    s.parse::<f64>().map(CAlpha::Value).map_err(|e| format!("expected a number or `auto`: {e}"))
}

/// A round count, or `None` for the largest count meeting the accuracy
/// condition.
#[derive(Debug, Clone, Copy)]
pub struct Rounds(pub Option<usize>);

fn parse_rounds(s: &str) -> Result<Rounds, String> {
    if s == "auto" {
        return Ok(Rounds(None));
    }
    s.parse::<usize>().map(|t| Rounds(Some(t))).map_err(|e| format!("expected a count or `auto`: {e}"))
}

fn parse_init(s: &str) -> Result<InitPolicy, String> {
    match s {
        "first" => Ok(InitPolicy::First),
        "random" => Ok(InitPolicy::Random),
        other => Err(format!("unknown init policy {other:?} (first|random)")),
    }
}

#[derive(Args, Debug, Clone)]
pub struct PbrOptions {
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Constant in the threshold formula, or `auto`.
    #[arg(long, default_value = "1", value_parser = parse_c_alpha)]
    c_alpha: CAlpha,
    /// Run with the noise switched off; needs --alpha.
    #[arg(long)]
    noiseless: bool,
    /// Explicit threshold, overriding the formula.
    #[arg(long)]
    alpha: Option<f64>,
    /// Initial actions: first|random.
    #[arg(long, default_value = "first", value_parser = parse_init)]
    init: InitPolicy,
}

#[derive(Args, Debug, Clone)]
pub struct NrOptions {
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Round count, or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_rounds)]
    rounds: Rounds,
    /// Regret family: swap (correlated) or fixed (coarse correlated).
    #[arg(long, default_value = "swap")]
    family: Family,
    /// Run with the noise switched off.
    #[arg(long)]
    noiseless: bool,
    /// Run even if the accuracy condition fails.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
pub struct PbrArgs {
    /// Game specification (JSON).
    #[arg(long)]
    game: PathBuf,
    #[command(flatten)]
    opts: PbrOptions,
    /// Include the per-round trace in the record.
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
pub struct NrArgs {
    #[arg(long)]
    game: PathBuf,
    #[command(flatten)]
    opts: NrOptions,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    game: PathBuf,
    /// Run records, one JSON object per line, holding `profile` or `sequences`.
    #[arg(long)]
    input: PathBuf,
    /// pure|ce|cce
    #[arg(long, default_value = "ce")]
    concept: Concept,
    /// Estimate with this many sampled opponent profiles instead of exactly.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct IncentivesArgs {
    /// Mediated-game configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    player: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// pbr|nrlaplace
    #[arg(long)]
    mechanism: String,
    #[arg(long)]
    game: PathBuf,
    /// Neighboring input, as `player:from_type->to_type`.
    #[arg(long)]
    swap: String,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[command(flatten)]
    pbr: PbrOptions,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    #[arg(long, default_value = "auto", value_parser = parse_rounds)]
    rounds: Rounds,
    #[arg(long, default_value = "swap")]
    family: Family,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// csv|jsonl
    #[arg(long, default_value = "csv")]
    format: Format,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use jointdp::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Validation(_) | E::Parameter(_) | E::CapExceeded(_) | E::OutOfRange(_) | E::Json(_) | E::Csv(_) => 2,
                E::Infeasible(_) => 3,
                E::Io(_) => 4,
                E::Numeric(_) => 1,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 4;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut out: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Pbr(args) => commands::pbr(&args, seed, &mut out)?,
        Command::Nrlaplace(args) => commands::nrlaplace(&args, seed, &mut out)?,
        Command::Verify(args) => commands::verify(&args, seed, &mut out)?,
        Command::Incentives(args) => commands::incentives(&args, seed, &mut out)?,
        Command::Audit(args) => commands::audit(&args, seed, &mut out)?,
        Command::Experiment(args) => commands::experiment(&args, cli.seed, cli.timing, &mut out)?,
    }
    out.flush().context("writing output")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Library errors already quote their source, so drop repeats.
            let mut msg = err.to_string();
            for cause in err.chain().skip(1) {
                let text = cause.to_string();
                if !msg.contains(&text) {
                    msg.push_str(": ");
                    msg.push_str(&text);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&err))
        }
    }
}

//! `phi4lab`: runs simulations, verification suites and plane-convergence studies.
//!
//! Exit status: 0 when every enabled check passes, 1 on a failed check or runtime error,
//! 2 on a configuration error, 3 when the solver aborts.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{RunConfig, DEFAULT_CONFIG};
use output::{Artifacts, RunManifest};
use std::path::PathBuf;
use std::process::ExitCode;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "phi4lab", version, about = "Dynamic Phi^4 laboratory on two-dimensional tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration; the bundled reference configuration when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed of every noise stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "phi4lab-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the remainder equation for independent noise realizations.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        realizations: usize,
    },
    /// Empirical constants of the Besov-space inequalities.
    VerifyBesov {
        #[command(flatten)]
        common: Common,
        /// Comma-separated inequality names.
        #[arg(long, value_delimiter = ',')]
        kinds: Option<Vec<String>>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Covariance and Wick-centering checks of the Gaussian stack.
    VerifyWick {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Energy identity, re-substitution, a-priori bound and uniqueness checks of the solver.
    VerifySolver {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Cauchy-in-M studies of stacks and solutions under common noise.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Comma-separated side lengths.
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<f64>>,
        #[arg(long)]
        seeds: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<phi4lab::Error> for CliError {
    fn from(e: phi4lab::Error) -> Self {
        match e {
            phi4lab::Error::Config(m) => CliError::Config(m),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

/// Result of a command: whether all checks passed and the first abort time, if any.
pub struct Outcome {
    pub passed: bool,
    pub aborted: Option<f64>,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let text = match &common.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => DEFAULT_CONFIG.to_string(),
    };
    RunConfig::parse(&text).map_err(CliError::Config)
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("configuration has no [{section}] section"))
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let (name, common) = match &cli.command {
        Command::Simulate { common, .. } => ("simulate", common),
        Command::VerifyBesov { common, .. } => ("verify-besov", common),
        Command::VerifyWick { common, .. } => ("verify-wick", common),
        Command::VerifySolver { common, .. } => ("verify-solver", common),
        Command::Converge { common, .. } => ("converge", common),
    };
    let mut cfg = load(common)?;
    let count = match &cli.command {
        Command::Simulate { realizations, .. } => {
            if *realizations == 0 {
                return Err(CliError::Config("realizations must be at least 1".into()));
            }
            *realizations
        }
        Command::VerifyBesov { kinds, trials, .. } => {
            let b = cfg.besov.as_mut().ok_or_else(|| missing("besov"))?;
            if let Some(k) = kinds {
                b.kinds = Some(k.clone());
            }
            if let Some(t) = trials {
                b.trials = *t;
            }
            b.trials
        }
        Command::VerifyWick { samples, .. } => {
            let w = cfg.wick.as_mut().ok_or_else(|| missing("wick"))?;
            if let Some(s) = samples {
                w.samples = *s;
            }
            w.samples
        }
        Command::VerifySolver { seeds, .. } => {
            let s = cfg.verify_solver.as_mut().ok_or_else(|| missing("verify_solver"))?;
            if let Some(n) = seeds {
                s.seeds = *n;
            }
            s.seeds
        }
        Command::Converge { m_list, seeds, .. } => {
            let c = cfg.converge.as_mut().ok_or_else(|| missing("converge"))?;
            if let Some(m) = m_list {
                c.m_list = m.clone();
            }
            if let Some(n) = seeds {
                c.seeds = *n;
            }
            c.seeds
        }
    };
    // Overrides pass through the same validation as the file.
    let resolved_text = toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    cfg = RunConfig::parse(&resolved_text).map_err(CliError::Config)?;
    if count == 0 {
        return Err(CliError::Config("count must be at least 1".into()));
    }
    let manifest = RunManifest {
        command: name.to_string(),
        config_path: common.config.clone(),
        output_dir: common.out.clone(),
        root_seed: common.seed,
        realization_count: count,
    };
    let resolved = serde_json::to_value(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let header = match &cli.command {
        Command::Simulate { .. } => commands::simulate::HEADER,
        Command::VerifyBesov { .. } => commands::besov::HEADER,
        Command::VerifyWick { .. } => commands::wick::HEADER,
        Command::VerifySolver { .. } => commands::solver::HEADER,
        Command::Converge { .. } => commands::converge::HEADER,
    };
    let mut art = Artifacts::create(&manifest, &resolved, header)?;
    let seed = common.seed;
    let (outcome, body) = match &cli.command {
        Command::Simulate { .. } => commands::simulate::run(&cfg, seed, count, &mut art)?,
        Command::VerifyBesov { .. } => commands::besov::run(&cfg, seed, &mut art)?,
        Command::VerifyWick { .. } => commands::wick::run(&cfg, seed, &mut art)?,
        Command::VerifySolver { .. } => commands::solver::run(&cfg, seed, &mut art)?,
        Command::Converge { .. } => commands::converge::run(&cfg, seed, &mut art)?,
    };
    let report = serde_json::json!({
        "command": name,
        "passed": outcome.passed,
        "aborted_at": outcome.aborted,
        "warnings": cfg.solver().warnings(),
        "config": resolved,
        "results": body,
    });
    art.write_report(&report)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Outcome { aborted: Some(t), .. }) => {
            eprintln!("solver aborted at t = {t}");
            ExitCode::from(3)
        }
        Ok(Outcome { passed: true, .. }) => ExitCode::SUCCESS,
        Ok(Outcome { passed: false, .. }) => {
            eprintln!("one or more checks failed; see report.json");
            ExitCode::from(1)
        }
        Err(CliError::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

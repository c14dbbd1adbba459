//! Config-driven orchestration for the `distwave` binary: spectral tables,
//! transform checks, evolutions, kernel diagnostics and estimate verification.

pub mod config;
pub mod stages;

use anyhow::Result;
use config::{ConfigError, RunConfig};
use stages::{Check, Context, Stage};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ACCEPTANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STAGE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stage(Stage),
    Run,
    Report,
}

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Stage(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Stage(_) => EXIT_STAGE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Stage(e) => write!(f, "{e:#}"),
        }
    }
}

/// True when no acceptance check failed.
pub fn all_accepted(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed || !c.acceptance)
}

pub fn execute(command: Command, config_path: &Path, out: Option<PathBuf>) -> Result<Vec<Check>, Failure> {
    let config = RunConfig::load(config_path).map_err(Failure::Config)?;
    execute_config(command, config, out)
}

pub fn execute_config(command: Command, config: RunConfig, out: Option<PathBuf>) -> Result<Vec<Check>, Failure> {
    let ctx = Context::new(config, out).map_err(Failure::Stage)?;
    let run = || -> Result<Vec<Check>> {
        match command {
            Command::Stage(s) => stages::run_stage(&ctx, s),
            Command::Report => stages::report(&ctx.out),
            Command::Run => {
                for s in Stage::PIPELINE {
                    stages::run_stage(&ctx, s)?;
                }
                stages::report(&ctx.out)
            }
        }
    };
    run().map_err(Failure::Stage)
}

/// Exit status for a finished command.
pub fn exit_code(result: &Result<Vec<Check>, Failure>) -> i32 {
    match result {
        Ok(checks) if all_accepted(checks) => EXIT_OK,
        Ok(_) => EXIT_ACCEPTANCE,
        Err(f) => f.exit_code(),
    }
}

/// Rayon pool size from `--threads`, else `DISTWAVE_THREADS`, else the rayon default.
pub fn configure_threads(threads: Option<usize>) -> Result<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var("DISTWAVE_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| anyhow::anyhow!("DISTWAVE_THREADS={v:?} is not a count"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}


use clap::{Parser, Subcommand};
use distwave_cli::stages::Stage;
use distwave_cli::{configure_threads, execute, exit_code, Command, EXIT_STAGE};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "distwave", version, about = "Wave evolution under inverse-square Schrodinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Build the spectral table and write spectrum.csv and phi_matrix.bin
    Spectrum,
    /// Plancherel, round-trip and diagonalization checks on the test suite
    TransformCheck,
    /// Spectral evolution snapshots and energy series
    Evolve,
    /// Spectral propagator against the finite-difference solver
    OracleCompare,
    /// Kernel dump and vector-field identity checks
    Kernel,
    /// Estimate verification reports
    Verify,
    /// Summarize existing check files
    Report,
    /// Every stage in order, then the summary
    Run,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e:#}");
        std::process::exit(EXIT_STAGE);
    }
    let Some(config) = cli.config else {
        eprintln!("error: --config <path> is required");
        std::process::exit(distwave_cli::EXIT_CONFIG);
    };
    let command = match cli.command {
        Cmd::Spectrum => Command::Stage(Stage::Spectrum),
        Cmd::TransformCheck => Command::Stage(Stage::TransformCheck),
        Cmd::Evolve => Command::Stage(Stage::Evolve),
        Cmd::OracleCompare => Command::Stage(Stage::OracleCompare),
        Cmd::Kernel => Command::Stage(Stage::Kernel),
        Cmd::Verify => Command::Stage(Stage::Verify),
        Cmd::Report => Command::Report,
        Cmd::Run => Command::Run,
    };
    let result = execute(command, &config, cli.out);
    match &result {
        Ok(checks) => {
            for c in checks {
                println!(
                    "{:<16} {:<40} {:>12.4e} {:>12.4e} {}{}",
                    c.stage,
                    c.name,
                    c.value,
                    c.threshold,
                    if c.passed { "pass" } else { "FAIL" },
                    if c.acceptance { "" } else { " (info)" }
                );
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&result));
}

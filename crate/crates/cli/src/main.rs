use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quadopt_cli::{load_config, run_scenario, validate_config, Format, Overrides, Scenario, EXIT_OK};

#[derive(Parser)]
#[command(name = "quadopt", version = quadopt_cli::VERSION, about = "Quadratic optomechanics scenarios as data files")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean displacement collapse and revival.
    Fig1(RunArgs),
    /// Displacement variance, exact and printed forms.
    Fig2(RunArgs),
    /// Q snapshots for a photon Fock state.
    Fig3(RunArgs),
    /// Q snapshots for a coherent photon state and phonon Fock state.
    Fig4(RunArgs),
    /// Resolved transmission peaks and phonon statistics.
    Fig5(RunArgs),
    /// Thermal vs coherent transmission lineshape.
    Fig6(RunArgs),
    /// Zero-point-energy frequency shift and feasibility.
    ZpeReport(RunArgs),
    /// Occupancy from a thermal transmission trace.
    Thermometry(RunArgs),
    /// Displacement and variance for arbitrary parameters.
    Custom(RunArgs),
    /// Check a config file and print it with all defaults filled in.
    Validate {
        path: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format; repeat for several.
    #[arg(long, value_enum)]
    format: Vec<Format>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let (scenario, args) = match cli.command {
        Command::Validate { path } => {
            return match validate_config(&path) {
                Ok(c) => {
                    print!("{}", c.to_toml());
                    ExitCode::from(EXIT_OK)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(quadopt_cli::EXIT_CONFIG)
                }
            };
        }
        Command::Fig1(a) => (Scenario::Fig1, a),
        Command::Fig2(a) => (Scenario::Fig2, a),
        Command::Fig3(a) => (Scenario::Fig3, a),
        Command::Fig4(a) => (Scenario::Fig4, a),
        Command::Fig5(a) => (Scenario::Fig5, a),
        Command::Fig6(a) => (Scenario::Fig6, a),
        Command::ZpeReport(a) => (Scenario::ZpeReport, a),
        Command::Thermometry(a) => (Scenario::Thermometry, a),
        Command::Custom(a) => (Scenario::Custom, a),
    };
    let overrides = Overrides {
        scenario: Some(scenario),
        out: args.out,
        formats: args.format,
        seed: args.seed,
        threads: args.threads,
    };
    let result = load_config(args.config.as_deref(), &overrides)
        .map_err(quadopt_cli::RunError::from)
        .and_then(|c| run_scenario(&c));
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

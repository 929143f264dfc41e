//! Thin command-line wrapper around the experiment runner.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid config, 3 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use aif::error::Error;
use aif::{load_carry, load_config, run_experiment, run_paper_protocol, write_results};

#[derive(Parser)]
#[command(name = "aif", about = "Active inference continual-learning runner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its result files.
    Run {
        /// Scenario file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed (falls back to AIF_SEED, then the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// final_a.json from a previous run to continue from.
        #[arg(long)]
        carry: Option<PathBuf>,
    },
    /// Run the bundled three-environment protocol (env1, then env2 and env3
    /// continuing from env1's learned concentrations).
    #[command(name = "paper-protocol")]
    PaperProtocol {
        /// Directory receiving env1/, env2/, and env3/ result subdirectories.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed of all three phases.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a scenario file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn env_seed() -> Option<u64> {
    std::env::var("AIF_SEED").ok().and_then(|s| s.parse().ok())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ConfigParse { .. } | Error::ConfigInvalid(_) => 2,
        _ => 3,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            carry,
        } => {
            let mut scenario = load_config(&config)?;
            if let Some(seed) = seed.or_else(env_seed) {
                scenario.seed = seed;
            }
            let snapshot = carry.as_deref().map(load_carry).transpose()?;
            let result = run_experiment(&scenario, snapshot.as_ref())?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
            write_results(&result, &out)?;
            let last = result.scores.last().expect("at least one iteration");
            println!(
                "{}: {} iterations, final {} score {:.4} -> {}",
                scenario.name,
                result.scores.len(),
                scenario.score_scope.label(),
                last.scoped.total_norm,
                out.display()
            );
            Ok(())
        }
        Command::PaperProtocol { out, seed } => {
            let seed = seed.or_else(env_seed);
            let protocol = run_paper_protocol(&out, seed)?;
            for (name, result) in [
                ("env1", &protocol.env1),
                ("env2", &protocol.env2),
                ("env3", &protocol.env3),
            ] {
                let last = result.scores.last().expect("at least one iteration");
                println!(
                    "{name}: iterations {}..={}, final {} score {:.4}",
                    result.config.start_iteration,
                    result.config.start_iteration + result.config.iterations - 1,
                    result.config.score_scope.label(),
                    last.scoped.total_norm
                );
            }
            println!("results in {}", out.display());
            Ok(())
        }
        Command::Validate { config } => {
            let scenario = load_config(&config)?;
            println!(
                "{}: ok ({} industries, {} processes, {} outcomes, {} iterations)",
                scenario.name,
                scenario.dims.industries,
                scenario.dims.processes,
                scenario.dims.outcomes,
                scenario.iterations
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // clap prints help/usage text itself
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

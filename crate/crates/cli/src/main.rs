//! `fb`: batch front end for the Fokker-Planck verification toolkit.
//!
//! Exit codes: 0 all checks hold (or are inconclusive), 1 at least one
//! verdict is `violated`, 2 config/parse error, 3 runtime abort.

mod config;
mod scenario;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use fb_core::checks::CheckRegistry;
use fb_core::error::Error;

const BUILTIN_SCENARIOS: &[(&str, &str, &str)] = &[
    (
        "heat_d1",
        include_str!("../scenarios/heat_d1.ini"),
        "pure diffusion benchmark (a = 1/2, b = 0) with residual and Fisher-bound checks",
    ),
    (
        "ou_stationary",
        include_str!("../scenarios/ou_stationary.ini"),
        "stationary Ornstein-Uhlenbeck run exercising the equality sentinel and pointwise bounds",
    ),
    (
        "ou_relax",
        include_str!("../scenarios/ou_relax.ini"),
        "Ornstein-Uhlenbeck relaxation from variance 4 toward the stationary profile",
    ),
    (
        "moser_ladders",
        include_str!("../scenarios/moser_ladders.ini"),
        "exact-rational exponent ladders and the interpolation property suite",
    ),
];

#[derive(Parser)]
#[command(
    name = "fb",
    about = "Solve weak parabolic Fokker-Planck equations and verify a-priori estimates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config (a path, or a bundled scenario name).
    Run {
        /// Path to an INI scenario config, or a bundled name from `fb list`.
        config: String,
        /// Output directory (overrides the scenario's own setting).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the check phase.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Seed for randomized property checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List bundled scenarios and registered checks.
    List,
    /// Describe a check: statement and parameter schema.
    Describe { check: String },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("FB_LOG")).init();
    std::process::exit(real_main());
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 3,
    }
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    let registry = CheckRegistry::builtin();
    match cli.command {
        Command::List => {
            println!("bundled scenarios:");
            for (name, _, blurb) in BUILTIN_SCENARIOS {
                println!("  {name:<16} {blurb}");
            }
            println!("\nchecks:");
            for check in registry.iter() {
                println!("  {:<16} {}", check.name(), check.summary());
            }
            0
        }
        Command::Describe { check } => match registry.get(&check) {
            None => {
                eprintln!(
                    "error: unknown check '{check}' (known: {})",
                    registry.names().join(", ")
                );
                2
            }
            Some(c) => {
                println!("{} - {}", c.name(), c.summary());
                println!("\nstatement:\n  {}", c.statement());
                println!("\nparameters:");
                for (name, desc) in c.params() {
                    println!("  {name:<10} {desc}");
                }
                0
            }
        },
        Command::Run {
            config,
            out,
            threads,
            seed,
        } => {
            let path = PathBuf::from(&config);
            let text = if path.exists() {
                match std::fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => {
                        eprintln!("error: cannot read {}: {e}", path.display());
                        return 2;
                    }
                }
            } else if let Some((_, text, _)) = BUILTIN_SCENARIOS
                .iter()
                .find(|(name, _, _)| *name == config)
            {
                (*text).to_string()
            } else {
                eprintln!(
                    "error: '{config}' is neither a file nor a bundled scenario (bundled: {})",
                    BUILTIN_SCENARIOS
                        .iter()
                        .map(|(n, _, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ")
                );
                return 2;
            };
            let scenario = match config::Scenario::from_ini(&text, &registry) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            match scenario::run_scenario(&scenario, &registry, out.as_deref(), seed, threads) {
                Ok(summary) => {
                    println!(
                        "{}: holds={} violated={} inconclusive={} -> {}",
                        scenario.name,
                        summary.holds,
                        summary.violated,
                        summary.inconclusive,
                        summary.out_dir.display()
                    );
                    summary.exit_code
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    error_code(&e)
                }
            }
        }
    }
}

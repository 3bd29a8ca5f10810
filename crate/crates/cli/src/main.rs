//! Command-line front end: `ratings-xva run <config>`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ratings_xva::output::{run_grid, OutputError, RunOptions};
use ratings_xva::scenario::ScenarioError;
use ratings_xva::Scenario;

#[derive(Parser)]
#[command(name = "ratings-xva", version, about = "Counterparty-risk adjustments with rating triggers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate every adjustment table described by a scenario file.
    Run {
        config: PathBuf,
        /// Number of Monte Carlo paths (overrides the config).
        #[arg(long)]
        paths: Option<u64>,
        /// Base seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config; default `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the rating trajectories of the first N paths (default 100).
        #[arg(long, value_name = "N", num_args = 0..=1, default_missing_value = "100")]
        dump_paths: Option<u64>,
    },
    /// Parse and validate a scenario, printing the embedded generators.
    Check { config: PathBuf },
}

fn scenario_exit(e: &ScenarioError) -> u8 {
    match e {
        ScenarioError::Io { .. } => 1,
        e if e.is_numeric() => 3,
        _ => 2,
    }
}

fn fail(msg: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { config } => {
            let scenario = match Scenario::from_path(&config) {
                Ok(s) => s,
                Err(e) => return fail(&e, scenario_exit(&e)),
            };
            let names = ["counterparty", "investor", "reference"];
            for (name, e) in names.iter().zip(&scenario.embeddings) {
                println!("{name} generator (reproduction error {:e}):", e.reproduction_error);
                println!("{}", e.generator.matrix());
            }
            println!("long-run mean of the short rate: {}", scenario.rates.long_run_mean());
            ExitCode::SUCCESS
        }
        Command::Run { config, paths, seed, out, dump_paths } => {
            let scenario = match Scenario::from_path(&config) {
                Ok(s) => s,
                Err(e) => return fail(&e, scenario_exit(&e)),
            };
            let mut opts = RunOptions::from_scenario(&scenario);
            if let Some(n) = paths {
                if n < 2 {
                    return fail(format!("--paths must be at least 2, got {n}"), 2);
                }
                opts.n_paths = n;
            }
            if let Some(s) = seed {
                opts.seed = s;
            }
            opts.dump_paths = dump_paths;
            let out_dir = out.or_else(|| scenario.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            eprintln!(
                "{} paths, seed {}, short-rate long-run mean {}",
                opts.n_paths,
                opts.seed,
                scenario.rates.long_run_mean()
            );
            match run_grid(&scenario, &out_dir, opts) {
                Ok(summary) => {
                    for f in summary.files.iter().filter(|f| f.extension().is_some_and(|x| x == "txt")) {
                        if let Ok(text) = std::fs::read_to_string(f) {
                            println!("{text}");
                        }
                    }
                    for f in &summary.files {
                        eprintln!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(OutputError::Scenario(e)) => fail(&e, scenario_exit(&e)),
                Err(e) => fail(&e, 1),
            }
        }
    }
}

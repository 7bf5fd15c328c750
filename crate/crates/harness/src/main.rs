use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dkf_harness::export::export_csv;
use dkf_harness::report;
use dkf_harness::{run_scenario, HarnessError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "dkf-harness", version, about = "Distributed Kalman filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo experiment and write CSV metrics.
    Run(RunArgs),
    /// Check the step sizes against the stability bounds of the graph.
    Validate(ConfigArgs),
    /// Print Laplacian diagnostics of the configured graph.
    Spectrum(ConfigArgs),
    /// Print the steady-state prior covariance of the centralized filter.
    Dare(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario file; defaults apply when omitted.
    #[arg(value_name = "CONFIG")]
    config_path: Option<PathBuf>,
    #[arg(long, value_name = "PATH", conflicts_with = "config_path")]
    config: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "K")]
    runs: Option<usize>,
}

fn load(args: &ConfigArgs) -> Result<ScenarioConfig, HarnessError> {
    match args.config.as_ref().or(args.config_path.as_ref()) {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

fn execute(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let mut cfg = load(&args.common)?;
            if let Some(seed) = args.seed {
                cfg.run.master_seed = seed;
            }
            if let Some(runs) = args.runs {
                cfg.run.n_mc_runs = runs;
            }
            if let Some(out) = args.output {
                cfg.run.output_dir = out;
            }
            let metrics = run_scenario(&cfg)?;
            export_csv(&metrics, &cfg.run.output_dir)?;
            if !args.common.quiet {
                let last = metrics.rmse_pos.last().expect("horizon is at least one step");
                let mean = last.iter().sum::<f64>() / last.len() as f64;
                println!("runs {}  steps {}  nodes {}", metrics.n_runs, metrics.horizon(), metrics.n_nodes);
                println!("final mean position rmse {mean:.6}");
                println!(
                    "messages {}  scalars {}  schema violations {}",
                    metrics.comm_totals.messages, metrics.comm_totals.scalars, metrics.schema_violations
                );
                println!("wrote {}", cfg.run.output_dir.display());
            }
            Ok(0)
        }
        Command::Validate(args) => {
            let v = report::validate_params(&load(&args)?)?;
            if !args.quiet {
                print!("{}", v.text);
            }
            Ok(if v.passed { 0 } else { 2 })
        }
        Command::Spectrum(args) => {
            let text = report::spectrum(&load(&args)?)?;
            if !args.quiet {
                print!("{text}");
            }
            Ok(0)
        }
        Command::Dare(args) => {
            let text = report::dare(&load(&args)?)?;
            if !args.quiet {
                print!("{text}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

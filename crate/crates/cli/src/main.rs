//! `trimlump` command-line experiment runner.

mod config;
mod plot;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Param};
use run::{run_resolved, sweep, Failure};

#[derive(Debug, Parser)]
#[command(
    name = "trimlump",
    version,
    about = "Trimmed isogeometric wave experiments with mass lumping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment.
    Run { config: PathBuf },
    /// Run one experiment per value of a parameter.
    Sweep {
        config: PathBuf,
        /// eps, p, N, gamma or mass.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<String>,
    },
}

fn load(path: &PathBuf, cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut c = ExperimentConfig::parse(&text).map_err(Failure::Config)?;
    if let Some(out) = &cli.out {
        c.output_dir = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    Ok(c)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { config } => {
            let c = load(config, cli)?;
            let r = c.resolve().map_err(Failure::Config)?;
            let s = run_resolved(&c, &r)?;
            println!(
                "{}: {} unknowns, lambda_max {:.6e}, dt {:.6e}, {} steps -> {}",
                s.example,
                s.unknowns,
                s.lambda_max,
                s.dt,
                s.steps,
                r.output_dir.display()
            );
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let c = load(config, cli)?;
            let param: Param = param.parse().map_err(Failure::Config)?;
            let root = c.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            let outcome = sweep(&c, param, values, &root)?;
            println!(
                "sweep over {param}: {} members, {} failed -> {}",
                values.len(),
                outcome.failed,
                root.display()
            );
            if outcome.failed > 0 {
                return Err(Failure::Runtime(format!(
                    "{} sweep member(s) failed",
                    outcome.failed
                )));
            }
            Ok(())
        }
    }
}

/// Output directory named by the command line or the configuration file.
fn report_dir(cli: &Cli) -> Option<PathBuf> {
    if let Some(out) = &cli.out {
        return Some(out.clone());
    }
    let path = match &cli.command {
        Command::Run { config } | Command::Sweep { config, .. } => config,
    };
    fs::read_to_string(path)
        .ok()
        .and_then(|t| ExperimentConfig::parse(&t).ok())
        .and_then(|c| c.output_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let report = f.report().to_toml();
            eprint!("{report}");
            if let Some(dir) = report_dir(&cli) {
                if fs::create_dir_all(&dir).is_ok() {
                    let _ = fs::write(dir.join("error.toml"), &report);
                }
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

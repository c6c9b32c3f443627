use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ionparity_cli::config::{Overrides, ScenarioConfig};
use ionparity_cli::{resolve, run_and_write, scenarios};

#[derive(Parser)]
#[command(name = "ionparity", version, about = "Trapped-ion time parity, spatial parity and Galilean boost simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario or a scenario file.
    Run {
        /// Scenario name (see `list`) or path to a TOML file.
        target: String,
        #[arg(long)]
        fock_cutoff: Option<usize>,
        /// Integrator step in units of 1/ν.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        noise_off: bool,
        #[arg(long)]
        rwa_only: bool,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Seed for the shot-noise readout.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in scenarios.
    List,
    /// Check a scenario file without running it.
    Validate { path: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::List => print!("{}", scenarios::listing()),
        Command::Validate { path } => {
            let cfg = ScenarioConfig::from_path(&path)?;
            let runs = ionparity_cli::runner::plan_runs(&cfg)?;
            println!("{}: ok ({} runs)", path.display(), runs.len());
        }
        Command::Run {
            target,
            fock_cutoff,
            dt,
            noise_off,
            rwa_only,
            out_dir,
            seed,
        } => {
            let mut cfg = resolve(&target)?;
            Overrides {
                fock_cutoff,
                dt,
                noise_off,
                rwa_only,
                seed,
            }
            .apply(&mut cfg)?;
            let started = std::time::Instant::now();
            let files = run_and_write(&cfg, &out_dir)?;
            for f in &files {
                println!("{}", f.display());
            }
            log::info!("{} finished in {:.1?}", cfg.name, started.elapsed());
        }
    }
    Ok(())
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use rotaens_core::io::{load_case_series, RunConfig};
use rotaens_core::par::{self, Execution};
use rotaens_core::pipeline::{
    bma_stage, emit_plot_tables, fit_stage, load_chains, project_stage, run_pipeline, simulate_stage,
    summarize_stage,
};
use rotaens_core::Result;

#[derive(Parser)]
#[command(
    name = "rotaens",
    version,
    about = "Rotavirus transmission model ensemble: fit, average and project"
)]
struct Cli {
    /// Config file of key=value lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. --set iterations=2000 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Worker threads (0 = all cores); takes precedence over the config
    #[arg(long, env = "ROTAENS_THREADS", global = true)]
    threads: Option<usize>,

    /// Run every batch on the calling thread
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic weekly case counts from one model
    Simulate {
        /// Output CSV (defaults to the configured data path)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one MCMC chain per model and write the chains
    Fit,
    /// Posterior summaries, burden, R0 and fitted profiles from saved chains
    Summarize,
    /// Model evidence and model-averaged estimates from saved chains
    Bma,
    /// Vaccination impact per model and model-averaged, from saved chains
    Project,
    /// Collect figure tables from existing artifacts
    Tables,
    /// Full pipeline: fit, summarize, bma, project, tables
    Run,
    /// Print the configuration
    Config {
        /// Print built-in defaults, ignoring --config and --set
        #[arg(long)]
        defaults: bool,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply_overrides(&cli.overrides)?;
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    Ok(config)
}

fn load_config_stage(cli: &Cli) -> Result<RunConfig> {
    load_config(cli).map_err(|e| e.in_stage("config"))
}

fn execute(cli: &Cli, config: &RunConfig) -> Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Config { .. } => unreachable!(),
        Command::Simulate { out } => {
            let path = out.clone().unwrap_or_else(|| config.data.clone());
            for p in simulate_stage(config, &path)? {
                info!("wrote {}", p.display());
            }
        }
        Command::Run => {
            let run = run_pipeline(config, exec)?;
            info!("wrote {} files to {}", run.files.len(), config.output.display());
        }
        Command::Tables => {
            emit_plot_tables(config)?;
        }
        cmd => {
            config.validate().map_err(|e| e.in_stage("config"))?;
            let series = load_case_series(&config.data).map_err(|e| e.in_stage("load"))?;
            let chains = match cmd {
                Command::Fit => {
                    fit_stage(config, &series, exec)?;
                    return Ok(());
                }
                _ => load_chains(config, series.cells()).map_err(|e| e.in_stage("load chains"))?,
            };
            match cmd {
                Command::Summarize => {
                    summarize_stage(config, &series, &chains, exec)?;
                }
                Command::Bma => {
                    let outputs = summarize_stage(config, &series, &chains, exec)?;
                    bma_stage(config, &series, &outputs, exec)?;
                }
                Command::Project => {
                    let outputs = summarize_stage(config, &series, &chains, exec)?;
                    let ensemble = bma_stage(config, &series, &outputs, exec)?;
                    project_stage(config, &chains, &ensemble.pmps(), exec)?;
                }
                _ => unreachable!(),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Command::Config { defaults } = cli.command {
        let config = if defaults {
            Ok(RunConfig::default())
        } else {
            load_config_stage(&cli)
        };
        return match config {
            Ok(c) => {
                print!("{}", c.to_text());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }
    let result = load_config_stage(&cli).and_then(|config| {
        let threads = config.threads;
        par::with_threads(threads, || execute(&cli, &config))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

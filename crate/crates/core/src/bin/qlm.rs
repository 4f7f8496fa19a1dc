use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qlm::circuits::{compile_trotter_step, resource_report};
use qlm::cli::{compare, dry_run, error_json, run, ExperimentConfig, Preset};
use qlm::configspace::{enumerate_sector, save_sector};
use qlm::dynamics::schedule_sublayers;
use qlm::{QlmError, Result};

#[derive(Parser)]
#[command(name = "qlm", version, about = "U(1) quantum link model string dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter regime; a config file overrides its fields.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        let preset = self.preset.as_deref().map(Preset::parse).transpose()?;
        ExperimentConfig::load_file(preset, self.config.as_deref())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run {
        #[command(flatten)]
        source: Source,
        /// Validate and print diagnostics without writing anything.
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deviation report between two run directories.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Also write the report as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the sector and write it to a file.
    Sector {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the resource report of one compiled Trotter step.
    Compile {
        #[command(flatten)]
        source: Source,
        /// Also write the gate list.
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            source,
            dry_run: dry,
            seed,
            out,
        } => {
            let mut config = source.load()?;
            if let Some(s) = seed {
                config.run.seed = s;
            }
            if let Some(o) = out {
                config.run.out = Some(o);
            }
            if dry {
                println!("{}", serde_json::to_string_pretty(&dry_run(&config)?)?);
                return Ok(());
            }
            let dir = config
                .run
                .out
                .clone()
                .ok_or_else(|| QlmError::Config("output directory required (--out or [run] out)".into()))?;
            let result = run(&config, &dir)?;
            println!(
                "{}",
                serde_json::json!({
                    "out": dir,
                    "config_hash": result.manifest.config_hash,
                    "sector_dim": result.manifest.sector_dim,
                    "n_steps": result.manifest.n_steps,
                })
            );
        }
        Command::Compare { a, b, out } => {
            let report = compare(&a, &b)?;
            if let Some(path) = out {
                std::fs::write(path, report.to_csv())?;
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Sector { source, out } => {
            let config = source.load()?;
            let r = config.resolve()?;
            let sector = enumerate_sector(&r.geom, r.initial, r.moves)?;
            save_sector(&sector, &out)?;
            println!("{}", serde_json::json!({ "out": out, "sector_dim": sector.len() }));
        }
        Command::Compile { source, circuit } => {
            let config = source.load()?;
            let r = config.resolve()?;
            let schedule = schedule_sublayers(&r.geom)?;
            let step = compile_trotter_step(&r.geom, &schedule, &config.params, config.evolution.dt)?;
            if let Some(path) = circuit {
                std::fs::write(Path::new(&path), step.to_text())?;
            }
            println!("{}", resource_report(&step).to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}

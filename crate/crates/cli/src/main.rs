// SPDX-License-Identifier: Apache-2.0

//! `qbb`: reference figures, custom visibility curves, rate tables and
//! Monte Carlo runs, written as CSV.
//!
//! Exit status is 0 on success, 2 for a bad configuration and 3 when a
//! computation does not converge. `QBB_OUT_DIR` sets the directory used
//! when `--out` is not given.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbb_core::figures::{FigureId, FigureOverrides};
use qbb_core::Error;

use config::{ConfigError, RunConfig, Scenario};

#[derive(Parser)]
#[command(name = "qbb", version, about = "Collision rates and non-Markovian visibility in a dilute gas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce a reference visibility plot (1a, 1b or 3).
    Figure {
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scenario described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed` in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a rate table from a configuration with `scenario = "rates"`.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Numerical(Error),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => Failure::Config(e.to_string()),
            Error::Io(msg) => Failure::Io(msg),
            other => Failure::Numerical(other),
        }
    }
}

fn output_path(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    out.unwrap_or_else(|| match std::env::var_os("QBB_OUT_DIR") {
        Some(dir) => PathBuf::from(dir).join(default_name),
        None => PathBuf::from(default_name),
    })
}

fn load(path: &PathBuf) -> Result<(Vec<u8>, RunConfig), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::Config(format!("{}: not UTF-8", path.display())))?;
    Ok((bytes, config::parse(&text)?))
}

fn execute(scenario: &Scenario, seed: u64, hash_input: &[u8], out: PathBuf) -> Result<(), Failure> {
    run::prepare(&out)?;
    let mut outcome = run::execute(scenario, seed, &out)?;
    let mut lines = vec![run::header(&run::config_hash(hash_input)), format!("scenario={}", scenario.name())];
    if scenario.uses_seed() {
        lines.push(format!("seed={seed}"));
    }
    run::write(&mut outcome, &lines, seed)?;
    println!("{}", outcome.summary);
    for a in &outcome.artifacts {
        println!("wrote {}", a.path().display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Figure { id, out } => {
            let id: FigureId = id.parse().map_err(|e: Error| Failure::Config(e.to_string()))?;
            let scenario = Scenario::Figure {
                id,
                overrides: FigureOverrides::default(),
            };
            let out = output_path(out, &format!("{}.csv", scenario.name()));
            execute(&scenario, 0, format!("figure {id}").as_bytes(), out)
        }
        Command::Run { config, seed, out } => {
            let (mut bytes, cfg) = load(&config)?;
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let out = output_path(out, &format!("{}.csv", cfg.scenario.name()));
            bytes.extend_from_slice(format!("\nseed {seed}\n").as_bytes());
            execute(&cfg.scenario, seed, &bytes, out)
        }
        Command::Rates { config, out } => {
            let (bytes, cfg) = load(&config)?;
            if !matches!(cfg.scenario, Scenario::Rates { .. }) {
                return Err(Failure::Config(format!(
                    "{}: `scenario` is \"{}\", expected \"rates\"",
                    config.display(),
                    cfg.scenario.name()
                )));
            }
            let out = output_path(out, "rates.csv");
            execute(&cfg.scenario, cfg.seed.unwrap_or(0), &bytes, out)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(msg) => eprintln!("configuration error:\n{msg}"),
                Failure::Numerical(e) => eprintln!("numerical failure: {e}"),
                Failure::Io(msg) => eprintln!("i/o failure: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

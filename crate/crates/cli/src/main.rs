//! `pointgas`: command-line runner for the pointgas studies.
//!
//! Each subcommand reads an optional `--config` file of `key = value` lines,
//! applies `--key value` flags on top, runs one library operation and writes
//! `<out>` (CSV), `<out>.json` (summary) and `<out>.conf` (resolved config,
//! accepted back by `--config`).
//!
//! Exit status: 0 on success, 1 when a check on the result fails (outputs
//! are still written), 2 on a usage or config error, 3 when the computation
//! itself fails.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches};

use config::{parse_file, Command, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] pointgas::error::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn status(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

fn cli() -> clap::Command {
    let mut app = clap::Command::new("pointgas")
        .about("Fermions with point interactions: spectra, free energies and bounds")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in Command::ALL {
        let mut sub = clap::Command::new(cmd.name())
            .about(cmd.about())
            .arg(Arg::new("config").long("config").value_name("FILE").help("key = value file; flags override it"));
        for k in cmd.all_keys() {
            let help = if k.default.is_empty() { k.help.to_string() } else { format!("{} [default: {}]", k.help, k.default) };
            sub = sub.arg(Arg::new(k.name).long(k.name).value_name("VALUE").action(ArgAction::Set).allow_hyphen_values(true).help(help));
        }
        app = app.subcommand(sub);
    }
    app
}

fn resolve(cmd: Command, m: &ArgMatches) -> Result<RunConfig, CliError> {
    let file = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            parse_file(&text, cmd)?
        }
        None => Vec::new(),
    };
    let flags: Vec<(String, String)> = cmd
        .all_keys()
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect();
    RunConfig::resolve(cmd, &file, &flags)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cmd = Command::from_name(name).expect("registered subcommand");
    let run = || -> Result<bool, CliError> {
        let cfg = resolve(cmd, sub)?;
        let outcome = commands::run(&cfg)?;
        let w = output::write_all(&cfg, &outcome)?;
        println!("{}", w.csv.display());
        println!("{}", w.summary.display());
        println!("{}", w.config.display());
        for f in &outcome.failures {
            eprintln!("FAILED: {f}");
        }
        Ok(outcome.failures.is_empty())
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("pointgas: {e}");
            ExitCode::from(e.status())
        }
    }
}

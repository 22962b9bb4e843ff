use std::process::ExitCode;

use blowlab_core::Error;
use clap::Parser;

mod args;
mod output;
mod run;

use args::{Cli, RunConfig, FORMAT_VERSION};
use output::OutDir;
use run::Failure;

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn load_config(cli: Cli) -> Result<(RunConfig, std::path::PathBuf), String> {
    match (cli.config, cli.command) {
        (Some(_), Some(_)) => Err("give either a subcommand or --config, not both".into()),
        (None, None) => Err("a subcommand or --config is required (see --help)".into()),
        (None, Some(command)) => Ok((
            RunConfig {
                format_version: FORMAT_VERSION,
                command,
            },
            cli.out,
        )),
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let config = serde_json::from_str(&text)
                .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
            Ok((config, cli.out))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, out) = match load_config(cli) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let dir = match OutDir::create(&out, &config) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_IO);
        }
    };
    match run::dispatch(&config, &dir) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.code)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {}: {e}", config.command.name());
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

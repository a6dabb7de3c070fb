mod commands;
mod config;
mod error;
mod output;

use clap::Parser;

use config::{Cli, CommandKind, RunConfig};
use error::CliError;

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ENTRENET_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("ENTRENET_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn run() -> Result<commands::RunSummary, CliError> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => return Err(CliError::usage(e.to_string().trim_end().to_string())),
    };
    configure_threads()?;
    let (kind, flags) = cli.command.split();
    let cfg = RunConfig::resolve(kind, flags)?;
    match kind {
        CommandKind::Reconstruct => commands::reconstruct(&cfg),
        CommandKind::Analyze => commands::analyze(&cfg),
        CommandKind::Validate => commands::validate(&cfg),
        CommandKind::Sweep => commands::sweep(&cfg),
    }
}

fn main() {
    match run() {
        Ok(summary) => println!("{}", serde_json::to_string(&summary).unwrap()),
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.code);
        }
    }
}

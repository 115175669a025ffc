mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, RunArgs};

/// Plans renewable energy hubs as linear programs.
#[derive(Parser, Debug)]
#[command(name = "hubforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a `.hub` model.
    Check { file: std::path::PathBuf },
    /// Print a `.hub` model in canonical form.
    Format {
        file: std::path::PathBuf,
        /// Rewrite the file in place.
        #[arg(long)]
        write: bool,
    },
    /// Optimize one scenario or model and write its report.
    Run(RunArgs),
    /// Optimize every bundled carrier and phase.
    Compare(CommonArgs),
    /// Write the reference or a synthetic capacity factor CSV.
    Profiles {
        #[arg(long)]
        synth_seed: Option<u64>,
        #[arg(long, default_value_t = 8760)]
        horizon: usize,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    User(String),
    Io(String),
    Optimization(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Io(_) => 2,
            CliError::Optimization(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::User(m) | CliError::Io(m) | CliError::Optimization(m) => m,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Check { file } => commands::check(&file),
        Command::Format { file, write } => commands::format(&file, write),
        Command::Run(args) => config::run_config(args).and_then(|c| commands::run(&c)),
        Command::Compare(args) => config::compare_settings(args).and_then(|s| commands::compare(&s)),
        Command::Profiles { synth_seed, horizon, out } => commands::profiles(synth_seed, horizon, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message().is_empty() {
                eprintln!("error: {}", e.message());
            }
            ExitCode::from(e.code())
        }
    }
}

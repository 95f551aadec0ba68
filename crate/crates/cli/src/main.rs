use std::io;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use netctl_cli::commands::{compare_command, run_command, validate_command, CommandResult, Exit, Format};
use netctl_cli::service::{router, AppState, Catalog};

#[derive(Parser)]
#[command(name = "netctl", version, about = "Simulate and compare UAV network control scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its per-cycle records as NDJSON.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// NDJSON output file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Override the scenario's cycle limit.
        #[arg(long)]
        max_cycles: Option<u32>,
    },
    /// Run a base scenario and what-if variants side by side.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// JSON array of variants. A variant `base` is a path relative to this file.
        #[arg(long)]
        variants: Option<PathBuf>,
        /// Write the comparison as a JSON document.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        max_cycles: Option<u32>,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "NETCTL_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Extra scenario files (`*.json`) served alongside the reference set.
        #[arg(long, env = "NETCTL_SCENARIOS")]
        scenarios: Option<PathBuf>,
    },
}

fn serve(bind: SocketAddr, dir: Option<PathBuf>) -> CommandResult {
    let failure = |message: String| netctl_cli::commands::CommandError { exit: Exit::Failure, message };
    let mut catalog = Catalog::reference();
    if let Some(dir) = dir {
        catalog.load_dir(&dir).map_err(|e| failure(e.to_string()))?;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| failure(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| failure(format!("{bind}: {e}")))?;
        eprintln!("listening on {bind}");
        axum::serve(listener, router(AppState::new(catalog)))
            .await
            .map_err(|e| failure(e.to_string()))
    })?;
    Ok(Exit::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let result = match cli.command {
        Command::Run { scenario, out, format, max_cycles } => {
            run_command(&scenario, out.as_deref(), format, max_cycles, &mut stdout)
        }
        Command::Compare { scenario, variants, out, format, max_cycles } => compare_command(
            &scenario,
            variants.as_deref(),
            out.as_deref(),
            format,
            max_cycles,
            &mut stdout,
        ),
        Command::Validate { scenario, format } => validate_command(&scenario, format, &mut stdout),
        Command::Serve { bind, scenarios } => serve(bind, scenarios),
    };
    match result {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(e) => {
            eprintln!("netctl: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}

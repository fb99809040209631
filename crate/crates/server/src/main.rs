use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use therapy_server::config::Config;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "therapy-server", version, about = "Speech-therapy practice service")]
struct Cli {
    /// Emit logs as JSON lines.
    #[arg(long, global = true)]
    json_logs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        /// TOML config file; THERAPY_* variables override it.
        #[arg(long, env = "THERAPY_CONFIG")]
        config: Option<PathBuf>,
    },
    /// Write the synthetic demo dictionary (WAVs plus seed.json).
    SeedDemo {
        #[arg(long, default_value = "demo-seed")]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    if cli.json_logs {
        tracing_subscriber::fmt().json().with_env_filter(filter).init();
    } else {
        tracing_subscriber::fmt().with_env_filter(filter).init();
    }
    match cli.command {
        Command::Serve { config } => {
            let config = Config::load(config.as_deref())?;
            tokio::runtime::Runtime::new()?.block_on(therapy_server::serve(config))
        }
        Command::SeedDemo { out } => {
            let seed = therapy_server::demo::write_seed(&out, &therapy_server::demo::dictionary())?;
            println!("{}", seed.display());
            Ok(())
        }
    }
}

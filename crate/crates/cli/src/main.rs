//! `qlm`: quasilocal and ADM energy-momentum from a TOML scenario file.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod run;

use config::Overrides;
use run::RunError;

#[derive(Parser)]
#[command(name = "qlm", version, about = "Quasilocal energy-momentum of large spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quasilocal energy over a radius ladder, extrapolated (e, p) and observer minimum
    Qle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long)]
        mass: Option<f64>,
        #[arg(long)]
        order: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ADM energy-momentum of the boosted slice with a paired quasilocal run
    Adm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embedding profiles u, v, H0 as CSV
    Embed {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Qle {
            config,
            beta,
            mass,
            order,
            out,
        } => {
            let cfg = config::load(&config, &Overrides { beta, mass, order, out })?;
            print_json(&run::run_qle(&cfg)?);
        }
        Command::Adm { config, out } => {
            let cfg = config::load(&config, &Overrides { out, ..Default::default() })?;
            print_json(&run::run_adm(&cfg)?);
        }
        Command::Embed { config } => {
            let cfg = config::load(&config, &Overrides::default())?;
            let stdout = std::io::stdout();
            if let Some(path) = run::run_embed(&cfg, &mut stdout.lock())? {
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn print_json(v: &serde_json::Value) {
    let text = serde_json::to_string_pretty(v).expect("json values serialize");
    // a closed pipe downstream is not an error for us
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qlm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

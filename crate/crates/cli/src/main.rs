use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod config;
mod output;
mod run;

use config::{Mode, RunConfig};
use run::RunError;

/// Simulate Bloch-Siegert oscillations of a driven two-level system and
/// write CSV tables and SVG plots.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// Flat `key = value` run configuration.
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Mode, overriding `mode`.
    #[arg(long, value_parser = |s: &str| s.parse::<Mode>())]
    mode: Option<Mode>,
}

fn execute(args: &Args) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| RunError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut cfg = RunConfig::parse(&text, args.mode)?;
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    for w in cfg.field.warnings() {
        eprintln!("warning: {w}");
    }
    let product = run::run(&cfg)?;
    for path in run::emit(&cfg, &product)? {
        println!("wrote {}", path.display());
    }
    for line in &product.table.footer_comments {
        println!("{line}");
    }
    match product.failure {
        Some(msg) => Err(RunError::Check(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bso-sim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

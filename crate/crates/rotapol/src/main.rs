use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rotapol::{configure_threads, run, Scenario};

/// Rotating stationary-light polariton scenarios.
#[derive(Debug, Parser)]
#[command(name = "rotapol", version, about)]
struct Cli {
    #[arg(value_enum)]
    scenario: Scenario,
    /// JSON scenario configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel scenarios.
    #[arg(long, env = "ROTAPOL_THREADS")]
    threads: Option<usize>,
    /// Also write a gnuplot script next to the data.
    #[arg(long)]
    gnuplot: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|()| run(cli.scenario, &cli.config, cli.out.as_deref(), cli.gnuplot));
    match result {
        Ok(outcome) => {
            if let Some(text) = outcome.stdout {
                print!("{text}");
            }
            println!("manifest: {}", outcome.out_dir.join(rotapol::io::MANIFEST_NAME).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

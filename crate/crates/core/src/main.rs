//! Scenario-driven CLI: pick a simulation or experiment with a JSON config
//! and write gnuplot-ready CSV plus JSON summaries.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rolling_billiards::config::ScenarioConfig;
use rolling_billiards::scenario;

#[derive(Parser)]
#[command(name = "rolling-billiards", version, about = "Rolling-ball and no-slip billiard simulations")]
struct Cli {
    /// Path to the JSON scenario config.
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files (created if missing).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Suppress the per-file progress lines.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(text) => text,
        Err(err) => {
            eprintln!("error: cannot read {}: {err}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let config = match ScenarioConfig::from_json(&text) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("config error: {err}");
            return ExitCode::from(2);
        }
    };
    match scenario::run(&config, &cli.out_dir, cli.quiet) {
        Ok(_) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

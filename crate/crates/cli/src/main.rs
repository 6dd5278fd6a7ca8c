use std::path::PathBuf;
use std::process::ExitCode;

use chaoslab::error::{EXIT_CONFIG, EXIT_OK};
use chaoslab::{CliError, ScenarioConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chaoslab", version, about = "Squeezed-frame Rabi model chaos diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run { config: PathBuf },
    /// List the named parameter sets and initial states.
    Presets,
    /// Compare headline scalars at n_max and 1.5 n_max.
    Converge { config: PathBuf },
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    match cli.command {
        Command::Presets => {
            print!("{}", chaoslab::presets_text());
            ExitCode::SUCCESS
        }
        Command::Run { config } => {
            let result = ScenarioConfig::load(&config).and_then(|c| chaoslab::run(&c));
            match result {
                Ok(report) => {
                    for w in &report.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("wrote {}", report.csv.display());
                    println!("wrote {}", report.metadata.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Converge { config } => {
            let result = ScenarioConfig::load(&config).and_then(|c| chaoslab::converge(&c));
            match result {
                Ok(report) => {
                    if !report.within_threshold {
                        eprintln!(
                            "warning: relative change {:.3e} exceeds {:.0e}",
                            report.max_rel_change, report.threshold
                        );
                    }
                    println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use algebroid_pbw::commands::with_expected;
use algebroid_pbw::recheck::recheck;
use algebroid_pbw::{exit, run, Command, RunOptions, RunReport};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Obstruction classes and PBW-type isomorphisms for Lie-Rinehart pairs.
#[derive(Parser, Debug)]
#[command(name = "algebroid-pbw", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Problem document (JSON).
    doc: PathBuf,
    /// Coefficient module: `1_A`, `L/A` or a module named in the document.
    #[arg(long)]
    module: Option<String>,
    /// Truncation degree.
    #[arg(short = 'N')]
    truncation: Option<usize>,
    /// Degree bound for solves over polynomial rings.
    #[arg(long)]
    bound: Option<u32>,
    /// Critical-pair budget for completion.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Recheck the certificates of a stored report instead of running.
    #[arg(long, value_name = "REPORT")]
    recheck: Option<PathBuf>,
    /// With `oracle`: print the document with its expected block filled in.
    #[arg(long)]
    emit_expected: bool,
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(report: &RunReport, format: Format) -> ExitCode {
    match format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    ExitCode::from(report.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let doc = match read(&cli.doc) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(exit::INPUT as u8);
        }
    };
    let opts = RunOptions {
        module: cli.module.clone(),
        truncation: cli.truncation,
        bound: cli.bound,
        budget: cli.budget,
    };
    if let Some(path) = &cli.recheck {
        let stored = match read(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(exit::INPUT as u8);
            }
        };
        return emit(&recheck(&doc, &stored), cli.format);
    }
    if cli.emit_expected {
        if !matches!(cli.command, Command::Oracle) {
            eprintln!("--emit-expected only applies to the oracle command");
            return ExitCode::from(exit::INPUT as u8);
        }
        return match with_expected(&doc, &opts) {
            Ok((filled, code)) => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&filled).expect("documents serialize")
                );
                ExitCode::from(code as u8)
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code() as u8)
            }
        };
    }
    emit(&run(cli.command, &doc, &opts), cli.format)
}

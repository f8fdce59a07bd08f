mod commands;
mod record;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use commands::Command;

#[derive(Debug, Parser)]
#[command(name = "pinlab", version, about = "Disordered pinning models: determinants, free energies, gap certificates")]
struct Cli {
    /// Worker threads for Monte Carlo replicas; never changes the output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let outcome = commands::run(&cli.command);
    let (mut record, failed) = match outcome {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    record.wall_ms = start.elapsed().as_millis() as u64;
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&record).map_err(|e| e.to_string()),
        Format::Csv => record.to_csv().map_err(|e| e.to_string()),
    };
    match text {
        Ok(t) => println!("{}", t.trim_end()),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

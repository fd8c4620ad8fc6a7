use std::process::ExitCode;

use clap::Parser;
use lambdaflow_cli::{commands, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = cli.command.resolve().and_then(|rc| commands::run(&rc));
    match outcome {
        Ok(summary) => {
            for line in &summary.report {
                println!("{line}");
            }
            for path in &summary.outputs {
                eprintln!("wrote {}", path.display());
            }
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

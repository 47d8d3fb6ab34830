use clap::Parser;
use rackforge::cli::{run, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-readable line on stderr.
            eprintln!(
                "{}",
                serde_json::json!({ "error": err.to_string() })
            );
            ExitCode::FAILURE
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use ffscale::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match ffscale::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.report() });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

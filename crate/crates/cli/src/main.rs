mod args;
mod commands;
mod io;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::io::{CliError, EXIT_NOT_MEMBER};

fn emit_error(err: &CliError) -> ExitCode {
    eprintln!("{}", err.payload());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return emit_error(&CliError::Invalid(e.to_string().trim_end().to_string())),
    };
    let report = match commands::run(cli.command) {
        Ok(r) => r,
        Err(e) => return emit_error(&e),
    };
    let mut text = match serde_json::to_string_pretty(&report.body) {
        Ok(t) => t,
        Err(e) => return emit_error(&CliError::Numeric(format!("report serialisation failed: {e}"))),
    };
    text.push('\n');
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        return emit_error(&CliError::Invalid(e));
    }
    if report.not_member {
        let payload = serde_json::json!({
            "error": "not-a-member",
            "message": "the image admits no certificate; the report carries the infeasibility certificate",
            "exit_code": EXIT_NOT_MEMBER,
        });
        eprintln!("{payload}");
        return ExitCode::from(EXIT_NOT_MEMBER as u8);
    }
    ExitCode::SUCCESS
}

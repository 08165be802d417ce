use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use edgemargin_cli::args::Cli;
use edgemargin_cli::commands::run;
use edgemargin_cli::error::EXIT_USAGE;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::to_string_pretty(&e.report()).expect("error report serializes");
            println!("{report}");
            eprintln!("edgemargin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

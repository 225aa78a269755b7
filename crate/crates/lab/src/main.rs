use std::process::ExitCode;

use clap::Parser;
use w2s_lab::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; everything else is a usage (config) error
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("w2s-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = csa_cli::Args::parse();
    match csa_cli::run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

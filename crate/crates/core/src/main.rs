use std::io;
use std::process::ExitCode;

use clap::Parser;
use wups::cli::{self, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    match cli::run(&args, &mut out, &mut err) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

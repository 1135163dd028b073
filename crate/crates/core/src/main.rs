use std::process::ExitCode;

use clap::Parser;
use nbrw::cli::{self, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli::init_thread_pool().and_then(|()| cli::run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

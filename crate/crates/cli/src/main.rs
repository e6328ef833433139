//! `sortition`: command-line front end for sortition-core.
//!
//! Exit codes: 0 success, 1 invalid input, 2 usage error, 3 resource cap
//! exceeded, 4 profile generation failed, 5 I/O, parse or config error,
//! 6 an invariant check found deviations.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use sortition_core::Error;

use crate::args::Cli;
use crate::commands::{run, DeviationFound};

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<DeviationFound>().is_some() {
        return 6;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Validation(_)) => 1,
        Some(Error::ResourceLimit(_)) => 3,
        Some(Error::Generation(_)) => 4,
        Some(Error::Parse { .. } | Error::Dimension(_) | Error::Io(_)) => 5,
        // Config files and output streams.
        None => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

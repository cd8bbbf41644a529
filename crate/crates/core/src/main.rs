use std::process::ExitCode;

use clap::Parser;
use nhsim::cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}

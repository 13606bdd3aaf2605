use std::io;
use std::process::ExitCode;

use clap::Parser;
use oia_cli::{run_cli, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run_cli(&cli, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}

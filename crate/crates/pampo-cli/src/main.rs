use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod cli;

fn main() -> ExitCode {
    let args = match cli::Cli::try_parse() {
        Ok(args) => args,
        // help/version print and exit 0 as usual
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        // usage errors are configuration errors: exit 1
        Err(e) => {
            eprint!("{e}");
            return ExitCode::FAILURE;
        }
    };
    cli::run(args)
}

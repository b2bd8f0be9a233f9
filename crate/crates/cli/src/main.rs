mod args;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use run::{dispatch, CliError, EXIT_OK, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        let pool = match jobs {
            0 => Err(CliError::usage("--jobs must be positive")),
            j => rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(CliError::usage),
        };
        if let Err(e) = pool {
            eprintln!("nncs: {}", e.message);
            return ExitCode::from(e.code);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("nncs: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

use std::process::ExitCode;

use djst_cli::{execute, parse_args};

fn main() -> ExitCode {
    let inv = match parse_args(std::env::args_os()) {
        Ok(Ok(inv)) => inv,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
        // clap prints help and version to stdout and usage errors to
        // stderr, exiting 0 or 2 respectively.
        Err(e) => e.exit(),
    };

    let level = if inv.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();

    match execute(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io;
use std::process::ExitCode;

use clap::Parser;
use decon::app::{execute, Cli, Outcome};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Outcome::Invalid.code() } else { 0 });
        }
    };
    let code = execute(cli, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code.code())
}

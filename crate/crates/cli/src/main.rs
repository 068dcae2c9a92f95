use std::io::{self, Write};
use std::process::ExitCode;

use alm_dividends_cli::{run, CliError};

fn main() -> ExitCode {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = run(std::env::args_os(), &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("almdiv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

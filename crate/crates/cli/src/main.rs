use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qrg_cli::{execute, Cli, EXIT_OK, EXIT_VALIDATION, OUT_DIR_ENV};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors as 2, which is reserved for numerical failures here.
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK } as u8);
        }
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let code = execute(
        &cli,
        env_out,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}

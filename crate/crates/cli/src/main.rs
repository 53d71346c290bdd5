use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let seed = qmcqoi_cli::env_seed();
    let code = qmcqoi_cli::main_with(std::env::args_os(), seed.as_deref(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code)
}

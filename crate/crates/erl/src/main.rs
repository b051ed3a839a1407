use std::process::ExitCode;

fn main() -> ExitCode {
    let code = erl::cli::main_with(std::env::args_os().collect(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}

use std::process::ExitCode;

fn main() -> ExitCode {
    liso::cli::main_with_args(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    bcl::cli::main_with_args(std::env::args_os())
}

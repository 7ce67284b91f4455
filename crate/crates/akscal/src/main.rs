use std::process::ExitCode;

fn main() -> ExitCode {
    akscal::cli::main_entry(std::env::args_os())
}

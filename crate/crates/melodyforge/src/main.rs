use std::process::ExitCode;

fn main() -> ExitCode {
    melodyforge::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    deltacut::cli::main()
}

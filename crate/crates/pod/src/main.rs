use std::process::ExitCode;

fn main() -> ExitCode {
    pod::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    rpsr_kit::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ionrate::cli::run() as u8)
}

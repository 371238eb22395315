use std::process::ExitCode;

fn main() -> ExitCode {
    match instgen_core::cli::run(std::env::args()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

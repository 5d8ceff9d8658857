use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use gaussgeo_cli::{configure_threads, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("GAUSSGEO_THREADS").ok();
    let result = configure_threads(threads.as_deref()).and_then(|()| execute(&cli));
    match result {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|()| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gaussgeo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

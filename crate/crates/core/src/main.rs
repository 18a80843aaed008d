use std::process::ExitCode;

use clap::Parser;

use adm_core::cli::{configure_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| run(&cli));
    match outcome {
        Ok(emitted) => {
            if let Some(data) = emitted.data {
                println!("{}", data.display());
            }
            println!("{}", emitted.metadata.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

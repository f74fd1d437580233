use clap::Parser;
use fsi_core::cli::{run, Cli, EXIT_ERROR};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Some(m) = &outcome.manifest {
                for note in &m.notes {
                    eprintln!("{note}");
                }
                eprintln!(
                    "{}: {} in {:.1} s, {} files",
                    m.command,
                    if m.success { "ok" } else { "FAILED" },
                    m.seconds,
                    m.files.len()
                );
            }
            std::process::exit(outcome.exit_code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_ERROR);
        }
    }
}

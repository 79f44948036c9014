use clap::Parser;

use divrate::cli::{init_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_threads().and_then(|_| run(&cli)) {
        match &e {
            divrate::Error::Numerical { op, .. } | divrate::Error::NotConverged { op, .. } => {
                eprintln!("error in {op}: {e}")
            }
            _ => eprintln!("error: {e}"),
        }
        std::process::exit(e.exit_code());
    }
}

use clap::Parser;
use statemon::cli::{execute_and_write, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute_and_write(&cli.command) {
        eprintln!("statemon: {e}");
        std::process::exit(e.exit_code());
    }
}

use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::Parser;
use sidelink_sim::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    if let Err(e) = ctrlc::set_handler(move || {
        eprintln!("stopping after the current batch...");
        flag.store(true, Ordering::SeqCst);
    }) {
        eprintln!("warning: no signal handler: {e}");
    }
    let code = match run(cli, &stop) {
        Ok(c) => c.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

use clap::Parser;
use gtnsgdm_expcli::cli::{execute, Cli};
use gtnsgdm_expcli::error::EXIT_OK;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(text) => {
            println!("{text}");
            std::process::exit(EXIT_OK);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;

use config::{parse_config, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let config = match parse_config(&cli) {
        Ok(c) => c,
        Err(violations) => {
            for v in violations {
                eprintln!("error: {v}");
            }
            eprintln!("\nFor more information, try '--help'.");
            return ExitCode::from(2);
        }
    };
    match run::run(config) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "schema": 1, "error": e.to_string() }));
            ExitCode::from(1)
        }
    }
}

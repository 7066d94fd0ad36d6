use std::process::ExitCode;

use clap::Parser;

use trace_lab::{config_from_cli, run, Cli, Outcome, UsageError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dump = cli.dump_config;
    let result = config_from_cli(cli).and_then(|cfg| {
        if dump {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            return Ok(Outcome::Pass);
        }
        run(&cfg)
    });
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            if e.chain().any(|c| c.is::<UsageError>()) {
                eprintln!("usage error: {e:#}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(2)
        }
    }
}

use std::fs;
use std::process::ExitCode;

use clap::Parser;
use entrans_cli::commands::{execute, Cli, Command};
use entrans_cli::{CliError, EXIT_FAILED, EXIT_INVALID, EXIT_OK};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(CliError::Invalid("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => Err(CliError::Invalid(format!("thread pool: {e}"))),
        },
        None => execute(&cli.command),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("entrans: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let with_matrices = match &cli.command {
        Command::Plan(a) => a.matrices,
        Command::Run(r) => r.plan.matrices,
        Command::Verify(_) => false,
    };
    let report = outcome.render(with_matrices);
    if cli.json {
        println!("{}", report.to_json_string());
    } else {
        print!("{}", report.to_text());
    }
    if let Some(path) = &cli.out {
        if let Err(e) = fs::write(path, outcome.render(true).to_json_string() + "\n") {
            eprintln!("entrans: {}", CliError::io(path, e));
            return ExitCode::from(EXIT_INVALID as u8);
        }
    }
    let code = if outcome.passed() { EXIT_OK } else { EXIT_FAILED };
    ExitCode::from(code as u8)
}

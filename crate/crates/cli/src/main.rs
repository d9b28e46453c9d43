mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::{CliError, Rendered, EXIT_CONFIG};

fn run(cli: &Cli) -> Result<Rendered, CliError> {
    let (rendered, out) = match &cli.command {
        Command::Eval(a) => (commands::cmd_eval(a)?, &a.output.out),
        Command::Convergence(a) => (commands::cmd_convergence(a)?, &a.output.out),
        Command::Charpoly(a) => (commands::cmd_charpoly(a)?, &a.output.out),
        Command::Verify(a) => (commands::cmd_verify(a)?, &a.output.out),
        Command::Bench(a) => (commands::cmd_bench(a)?, &a.output.out),
    };
    match out {
        Some(path) => {
            std::fs::write(path, &rendered.body)
                .map_err(|e| CliError::config("Io", format!("{}: {e}", path.display())))?;
            Ok(Rendered {
                body: String::new(),
                exit_code: rendered.exit_code,
            })
        }
        None => Ok(rendered),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config("Usage", e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cli) {
        Ok(r) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(r.body.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(r.exit_code)
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code)
        }
    }
}

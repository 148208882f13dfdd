use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use slicenc::{execute, write_artifacts, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match &cli.out_dir {
        Some(dir) => match write_artifacts(&run, dir) {
            Ok(report) => println!("{}", serde_json::to_string(&report).expect("report serialises")),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(e.exit_code());
            }
        },
        None => {
            let mut out = std::io::stdout().lock();
            let many = run.artifacts.len() > 1;
            for a in &run.artifacts {
                if many {
                    let _ = writeln!(out, "# {}", a.name);
                }
                let _ = out.write_all(a.content.as_bytes());
            }
            eprintln!("{}", serde_json::to_string(&run.report).expect("report serialises"));
        }
    }
    if let Some(e) = &run.failure {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    ExitCode::SUCCESS
}

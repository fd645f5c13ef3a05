use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use loadcycle_cli::{cmd_compare, cmd_run, cmd_validate, CliError};

#[derive(Parser)]
#[command(name = "loadcycle", version, about = "Wheel loader short loading cycle simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one loading cycle and write its output bundle
    Run {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Simulate two configurations and write both bundles plus their comparison
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check a configuration and print it with defaults filled in
    Validate { config: PathBuf },
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out } => {
            let m = cmd_run(&config, &out)?;
            println!("cycle_time {:.3} s  fuel_total {:.2} g  bucket_fill {:.3}", m.cycle_time, m.fuel_total, m.bucket_fill_final);
        }
        Command::Compare { a, b, out } => {
            let r = cmd_compare(&a, &b, &out)?;
            println!(
                "cycle_time {:+.3} s  fuel_total {:+.2} g  mean_engine_speed {:+.2} rad/s",
                r.cycle_time.delta, r.fuel_total.delta, r.mean_engine_speed.delta
            );
        }
        Command::Validate { config } => {
            let resolved = cmd_validate(&config)?;
            for key in &resolved.defaulted {
                let value = resolved.default_value(key).map(|v| v.to_string()).unwrap_or_default();
                eprintln!("note: {key} not set, default {value} substituted");
            }
            let text = serde_json::to_string_pretty(&resolved.config).map_err(|e| CliError::Config(e.to_string()))?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOADCYCLE_LOG", "warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

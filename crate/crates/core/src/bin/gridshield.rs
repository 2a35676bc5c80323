use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gridshield::cli::{cmd_replay, cmd_run, RunConfig, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "gridshield", version, about = "IDS-integrated SDN substation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios and write events.jsonl, result.json and delay_report.json.
    Run {
        /// baseline, attack1 or attack2; repeatable. Default: all three.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Scenario TOML file instead of a built-in scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// key=value, e.g. t_ids=0 or ids.decision_window_us=5000.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-score a saved events.jsonl.
    Replay {
        log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDSHIELD_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Run { scenarios, config, out, overrides, jobs } => {
            cmd_run(&RunConfig { scenarios, config, out, overrides, jobs })
        }
        Command::Replay { log, out } => cmd_replay(&log, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `run` and `replay` subcommands. Exit codes are the contract: 0 when every
//! scenario passes, 1 when one fails, 2 for unusable input.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::netsim::{EventLog, LogError};
use crate::scenarios::{
    load_builtin, load_file, run_many, score, ConfigError, ScenarioError, ScenarioId, ScenarioResult, ScenarioRun,
    ScenarioSpec, ScoreError,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Log { path: PathBuf, source: LogError },
    #[error("{path}: {source}")]
    Score { path: PathBuf, source: ScoreError },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Log { .. } | CliError::Score { .. } | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Scenario(ScenarioError::Config(_) | ScenarioError::Device(_)) => EXIT_CONFIG,
            CliError::Scenario(_) | CliError::Io { .. } => EXIT_FAIL,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub scenarios: Vec<String>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub overrides: Vec<String>,
    pub jobs: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("result types serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes events.jsonl, result.json and delay_report.json into `dir`.
pub fn write_outputs(dir: &Path, run: &ScenarioRun) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let events = dir.join("events.jsonl");
    fs::write(&events, run.log.to_jsonl()).map_err(io_err(&events))?;
    write_json(&dir.join("result.json"), &run.result)?;
    write_json(&dir.join("delay_report.json"), &run.result.delay)
}

fn summary(r: &ScenarioResult) -> String {
    let verdict = r.verdict.as_ref().map_or("none".to_owned(), |v| format!("{:?}", v.culprit));
    let delay = r.delay.as_ref().map_or("-".to_owned(), |d| format!("{}us", d.total_us));
    let status = if r.passed { "PASS".to_owned() } else { format!("FAIL {:?}", r.reasons) };
    format!(
        "{:<9} {status}  verdict={verdict} alerts={} trips={} delay={delay}",
        r.scenario.name(),
        r.alerts,
        r.breaker_trips
    )
}

fn resolve_specs(cfg: &RunConfig) -> Result<Vec<ScenarioSpec>, CliError> {
    if let Some(path) = &cfg.config {
        if !cfg.scenarios.is_empty() {
            return Err(CliError::Usage("use either --scenario or --config, not both".into()));
        }
        return Ok(vec![load_file(path, &cfg.overrides)?]);
    }
    let ids: Vec<ScenarioId> = if cfg.scenarios.is_empty() {
        ScenarioId::ALL.to_vec()
    } else {
        cfg.scenarios.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    };
    Ok(ids.into_iter().map(|id| load_builtin(id, &cfg.overrides)).collect::<Result<_, _>>()?)
}

pub fn cmd_run(cfg: &RunConfig) -> Result<i32, CliError> {
    let specs = resolve_specs(cfg)?;
    let nested = specs.len() > 1;
    let mut all_passed = true;
    for (spec, run) in specs.iter().zip(run_many(&specs, cfg.jobs)) {
        let run = run?;
        let dir = if nested { cfg.out.join(spec.scenario.id.name()) } else { cfg.out.clone() };
        write_outputs(&dir, &run)?;
        println!("{}", summary(&run.result));
        all_passed &= run.result.passed;
    }
    Ok(if all_passed { EXIT_PASS } else { EXIT_FAIL })
}

pub fn read_log(path: &Path) -> Result<EventLog, CliError> {
    // an unreadable input is bad input, not a failed run
    let file = fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    EventLog::read_jsonl(BufReader::new(file)).map_err(|source| CliError::Log { path: path.to_owned(), source })
}

/// Re-scores a saved log. Writes result.json into `out` when given.
pub fn cmd_replay(log_path: &Path, out: Option<&Path>) -> Result<i32, CliError> {
    let log = read_log(log_path)?;
    let result = score(&log).map_err(|source| CliError::Score { path: log_path.to_owned(), source })?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_json(&dir.join("result.json"), &result)?;
    }
    println!("{}", summary(&result));
    Ok(if result.passed { EXIT_PASS } else { EXIT_FAIL })
}

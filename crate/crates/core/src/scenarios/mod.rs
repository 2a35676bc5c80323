//! Executable scenarios: the no-attack baseline and the two attack case
//! studies, each loaded from a TOML fixture and scored from its event log.

mod config;
mod run;
mod score;
mod trace;

pub use config::{
    apply_override, deep_merge, load_builtin, load_file, load_str, ConfigError, DelayPaths, Expectation, FrameTemplate,
    InjectionSpec, ProcessingDelays, ScenarioId, ScenarioMeta, ScenarioSpec, SwitchSpec,
};
pub use run::{run_many, run_scenario, ScenarioError, ScenarioHeader, ScenarioRun, SCENARIO_SUBJECT};
pub use score::{score, Check, ScenarioResult, ScoreError};
pub use trace::{verify_forwarding_trace, Hop, HopDir};

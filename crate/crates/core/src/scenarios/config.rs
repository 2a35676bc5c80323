use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{GooseFrame, MacAddress};
use crate::delay::{DelayBudget, DelayComponents};
use crate::devices::{MuConfig, OmicronConfig, PiedConfig, Waveform};
use crate::ids::{Host, IdsConfig};
use crate::netsim::{build_topology, NodeRole, PortRef, TopologySpec};
use crate::sdn::{DefaultAction, FlowEntry, FlowTable};

use super::trace::Hop;

const BASE_FIXTURE: &str = include_str!("../../scenarios/substation.toml");
const BASELINE_FIXTURE: &str = include_str!("../../scenarios/baseline.toml");
const ATTACK1_FIXTURE: &str = include_str!("../../scenarios/attack1.toml");
const ATTACK2_FIXTURE: &str = include_str!("../../scenarios/attack2.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Baseline,
    Attack1,
    Attack2,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 3] = [ScenarioId::Baseline, ScenarioId::Attack1, ScenarioId::Attack2];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Baseline => "baseline",
            ScenarioId::Attack1 => "attack1",
            ScenarioId::Attack2 => "attack2",
        }
    }

    fn fixture(self) -> &'static str {
        match self {
            ScenarioId::Baseline => BASELINE_FIXTURE,
            ScenarioId::Attack1 => ATTACK1_FIXTURE,
            ScenarioId::Attack2 => ATTACK2_FIXTURE,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        ScenarioId::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| {
            ConfigError::Invalid(format!("unknown scenario `{s}` (expected baseline, attack1 or attack2)"))
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("override `{0}`: expected key=value")]
    BadOverride(String),
    #[error("override `{key}`: {reason}")]
    OverridePath { key: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

/// Processing delays in microseconds. Link delays come from the topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessingDelays {
    pub t_mu: u64,
    pub t_sp: u64,
    pub t_pied: u64,
    pub t_ss: u64,
    pub t_oc: u64,
    pub t_ids: u64,
}

/// Links whose latencies make up the two communication terms, each named
/// by one of its endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayPaths {
    pub sv: Vec<PortRef>,
    pub gs: Vec<PortRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSpec {
    #[serde(default)]
    pub default_action: DefaultAction,
    #[serde(default)]
    pub entries: Vec<FlowEntry>,
    /// Node that receives packet-in messages, if any.
    #[serde(default)]
    pub controller: Option<String>,
}

/// Abnormal publication. Fields left out are taken from the relay's own
/// publication settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameTemplate {
    #[serde(default)]
    pub src: Option<MacAddress>,
    #[serde(default)]
    pub gocb_ref: Option<String>,
    pub st_num: u32,
    pub sq_num: u32,
    pub trip: bool,
    #[serde(default)]
    pub ttl_ms: Option<u32>,
}

impl FrameTemplate {
    pub fn build(&self, pied: &PiedConfig) -> GooseFrame {
        GooseFrame {
            dst: pied.dst,
            src: self.src.unwrap_or(pied.mac),
            app_id: pied.app_id,
            gocb_ref: self.gocb_ref.clone().unwrap_or_else(|| pied.gocb_ref.clone()),
            time_allowed_to_live: self.ttl_ms.unwrap_or(pied.ttl_ms),
            st_num: self.st_num,
            sq_num: self.sq_num,
            test: false,
            timestamp: 0,
            dataset_ref: pied.dataset_ref.clone(),
            all_data: vec![self.trip],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub host: Host,
    pub port: PortRef,
    pub times_us: Vec<u64>,
    pub template: FrameTemplate,
}

/// Expected outcome, carried in the log header so scoring needs nothing
/// but the log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Expectation {
    pub verdict: Option<Host>,
    pub breaker_trips: u32,
    pub alerts: Option<usize>,
    pub enabled_ids_ports: Option<Vec<u8>>,
    pub disabled_ports: Vec<PortRef>,
    pub evidence_ports: Vec<u8>,
    pub isolated: Option<Host>,
    pub delay_budget: bool,
    pub trace: Vec<Hop>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub id: ScenarioId,
    pub duration_us: u64,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: ScenarioMeta,
    pub delays: ProcessingDelays,
    #[serde(default)]
    pub budget: DelayBudget,
    pub paths: DelayPaths,
    pub topology: TopologySpec,
    pub switches: BTreeMap<String, SwitchSpec>,
    pub mu: MuConfig,
    #[serde(default)]
    pub waveform: Waveform,
    pub pied: PiedConfig,
    #[serde(default)]
    pub omicron: OmicronConfig,
    pub ids: IdsConfig,
    #[serde(default)]
    pub injections: Vec<InjectionSpec>,
    #[serde(default)]
    pub expect: Expectation,
}

impl ScenarioSpec {
    pub fn builtin(id: ScenarioId) -> Result<Self, ConfigError> {
        load_builtin(id, &[])
    }

    /// Configured components; the communication terms are the summed
    /// latencies of the designated links.
    pub fn delay_components(&self) -> Result<DelayComponents, ConfigError> {
        let sum = |path: &[PortRef], what: &str| -> Result<u64, ConfigError> {
            path.iter()
                .map(|p| {
                    self.topology
                        .links
                        .iter()
                        .find(|l| &l.a == p || &l.b == p)
                        .map(|l| l.latency_us)
                        .ok_or_else(|| ConfigError::Invalid(format!("{what} path: port {p} is not linked")))
                })
                .sum()
        };
        let d = &self.delays;
        Ok(DelayComponents {
            t_mu: d.t_mu,
            t_sv: sum(&self.paths.sv, "sv")?,
            t_sp: d.t_sp,
            t_pied: d.t_pied,
            t_ss: d.t_ss,
            t_gs: sum(&self.paths.gs, "gs")?,
            t_oc: d.t_oc,
            t_ids: self.ids.effective_delay_us(d.t_ids),
            with_ids: self.ids.with_ids,
        })
    }

    pub fn switch_table(&self, node: &str, ports: u8) -> Result<FlowTable, ConfigError> {
        let sw = self
            .switches
            .get(node)
            .ok_or_else(|| ConfigError::Invalid(format!("switch `{node}` has no flow table")))?;
        FlowTable::from_entries(sw.entries.clone(), sw.default_action, ports)
            .map_err(|e| ConfigError::Invalid(format!("switch `{node}`: {e}")))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let net = build_topology(&self.topology).map_err(|e| ConfigError::Invalid(format!("topology: {e}")))?;
        if self.scenario.duration_us == 0 {
            return Err(ConfigError::Invalid("duration_us must be positive".into()));
        }
        for node in net.nodes() {
            if node.role.is_switch() {
                self.switch_table(&node.name, node.ports)?;
            }
        }
        for role in [NodeRole::Omicron, NodeRole::MergingUnit, NodeRole::Pied, NodeRole::Ids] {
            let n = net.nodes_with_role(role).count();
            if n != 1 {
                return Err(ConfigError::Invalid(format!("expected exactly one {role:?} node, found {n}")));
            }
        }
        self.mu.period_us().map_err(|e| ConfigError::Invalid(format!("mu: {e}")))?;
        self.pied.validate().map_err(|e| ConfigError::Invalid(format!("pied: {e}")))?;
        if self.ids.inspection_passes == 0 {
            return Err(ConfigError::Invalid("ids.inspection_passes must be at least 1".into()));
        }
        let required = match self.scenario.id {
            ScenarioId::Baseline => None,
            ScenarioId::Attack1 => Some(Host::StationBusSwitch),
            ScenarioId::Attack2 => Some(Host::Pied),
        };
        for inj in &self.injections {
            net.check_port(&inj.port).map_err(|e| ConfigError::Invalid(format!("injection: {e}")))?;
            if net.role_of(&inj.port.node) != Some(inj.host.role()) {
                return Err(ConfigError::Invalid(format!(
                    "injection host {:?} does not own port {}",
                    inj.host, inj.port
                )));
            }
            if required.is_some_and(|h| h != inj.host) {
                return Err(ConfigError::Invalid(format!("{} injects from {:?}", self.scenario.id, required.unwrap())));
            }
        }
        self.delay_components()?;
        Ok(())
    }
}

/// Recursive table merge; anything else in `overlay` replaces `base`.
pub fn deep_merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(existing) => deep_merge(existing, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn alias(key: &str) -> Result<String, ConfigError> {
    Ok(match key {
        "t_mu" | "t_sp" | "t_pied" | "t_ss" | "t_oc" | "t_ids" => format!("delays.{key}"),
        "t_sv" | "t_gs" => {
            return Err(ConfigError::OverridePath {
                key: key.into(),
                reason: "derived from link latencies; override the topology links instead".into(),
            })
        }
        "with_ids" | "inspection_passes" => format!("ids.{key}"),
        "duration_us" => "scenario.duration_us".into(),
        other => other.to_owned(),
    })
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `key=value` with a dotted key. Numeric segments index arrays.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::BadOverride(assignment.into()))?;
    let key = alias(key.trim())?;
    let value = parse_value(value.trim());
    let segments: Vec<&str> = key.split('.').collect();
    let bad = |reason: &str| ConfigError::OverridePath { key: key.clone(), reason: reason.into() };
    let (last, parents) = segments.split_last().ok_or_else(|| bad("empty key"))?;

    let mut cur = root;
    for seg in parents {
        cur = match cur {
            toml::Value::Table(t) => t.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(Default::default())),
            toml::Value::Array(a) => {
                let i: usize = seg.parse().map_err(|_| bad("array index expected"))?;
                a.get_mut(i).ok_or_else(|| bad("array index out of range"))?
            }
            _ => return Err(bad("path goes through a scalar")),
        };
    }
    match cur {
        toml::Value::Table(t) => {
            t.insert(last.to_string(), value);
        }
        toml::Value::Array(a) => {
            let i: usize = last.parse().map_err(|_| bad("array index expected"))?;
            *a.get_mut(i).ok_or_else(|| bad("array index out of range"))? = value;
        }
        _ => return Err(bad("path goes through a scalar")),
    }
    Ok(())
}

fn builtin_base(name: &str) -> Option<&'static str> {
    (name == "substation.toml").then_some(BASE_FIXTURE)
}

/// Resolves `base = "..."` chains and returns the merged tree.
fn resolve(text: &str, dir: Option<&Path>, depth: usize) -> Result<toml::Value, ConfigError> {
    if depth > 8 {
        return Err(ConfigError::Invalid("base chain too deep".into()));
    }
    let mut value: toml::Value = toml::Value::Table(toml::from_str(text)?);
    let base = value.as_table_mut().and_then(|t| t.remove("base"));
    let Some(base) = base else { return Ok(value) };
    let name = base.as_str().ok_or_else(|| ConfigError::Invalid("`base` must be a string".into()))?;
    let on_disk = dir.map(|d| d.join(name)).filter(|p| p.exists());
    let mut merged = match on_disk {
        Some(path) => {
            let text =
                std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
            resolve(&text, path.parent(), depth + 1)?
        }
        None => {
            let text = builtin_base(name).ok_or_else(|| ConfigError::Invalid(format!("base `{name}` not found")))?;
            resolve(text, None, depth + 1)?
        }
    };
    deep_merge(&mut merged, value);
    Ok(merged)
}

fn finish(mut tree: toml::Value, overrides: &[String]) -> Result<ScenarioSpec, ConfigError> {
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    let spec: ScenarioSpec = tree.try_into()?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_builtin(id: ScenarioId, overrides: &[String]) -> Result<ScenarioSpec, ConfigError> {
    finish(resolve(id.fixture(), None, 0)?, overrides)
}

pub fn load_file(path: &Path, overrides: &[String]) -> Result<ScenarioSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    finish(resolve(&text, path.parent(), 0)?, overrides)
}

pub fn load_str(text: &str, overrides: &[String]) -> Result<ScenarioSpec, ConfigError> {
    finish(resolve(text, None, 0)?, overrides)
}

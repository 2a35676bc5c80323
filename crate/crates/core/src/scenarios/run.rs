use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::delay::{DelayBudget, DelayComponents};
use crate::devices::{inject, DeviceConfigError, InjectError, MergingUnit, Omicron, Pied};
use crate::ids::{IdsDevice, IdsPorts};
use crate::netsim::{
    build_topology, EventDetail, EventKind, EventLog, NodeBehavior, NodeRole, SimError, SimTime, Simulator, Subject,
    TopologySpec,
};
use crate::sdn::SdnSwitch;

use super::config::{ConfigError, Expectation, ScenarioId, ScenarioSpec};
use super::score::{score, ScenarioResult, ScoreError};

/// First event of every scenario log: everything scoring and delay
/// attribution need besides the events themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioHeader {
    pub scenario: ScenarioId,
    pub description: String,
    pub duration_us: u64,
    pub topology: TopologySpec,
    pub delays: DelayComponents,
    pub budget: DelayBudget,
    pub ids_ports: IdsPorts,
    pub expect: Expectation,
}

impl ScenarioHeader {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self, ConfigError> {
        Ok(ScenarioHeader {
            scenario: spec.scenario.id,
            description: spec.scenario.description.clone(),
            duration_us: spec.scenario.duration_us,
            topology: spec.topology.clone(),
            delays: spec.delay_components()?,
            budget: spec.budget,
            ids_ports: spec.ids.ports,
            expect: spec.expect.clone(),
        })
    }

    pub fn roles(&self) -> BTreeMap<String, NodeRole> {
        self.topology.nodes.iter().map(|n| (n.name.clone(), n.role)).collect()
    }

    pub fn nodes_with_role(&self, role: NodeRole) -> impl Iterator<Item = &str> {
        self.topology.nodes.iter().filter(move |n| n.role == role).map(|n| n.name.as_str())
    }
}

/// Subject used for scenario-level events.
pub const SCENARIO_SUBJECT: &str = "scenario";

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("device: {0}")]
    Device(#[from] DeviceConfigError),
    #[error("injection: {0}")]
    Inject(#[from] InjectError),
    #[error("scoring: {0}")]
    Score(#[from] ScoreError),
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub log: EventLog,
    pub result: ScenarioResult,
}

fn behavior_for(
    spec: &ScenarioSpec,
    name: &str,
    role: NodeRole,
    ports: u8,
) -> Result<Box<dyn NodeBehavior>, ScenarioError> {
    let d = &spec.delays;
    Ok(match role {
        NodeRole::Omicron => Box::new(Omicron::new(&spec.omicron, d.t_oc)),
        NodeRole::MergingUnit => Box::new(MergingUnit::new(spec.mu.clone(), spec.waveform.clone(), d.t_mu)?),
        NodeRole::Pied => Box::new(Pied::new(spec.pied.clone(), d.t_pied)?),
        NodeRole::Ids => Box::new(IdsDevice::new(spec.ids.clone(), d.t_ids)),
        NodeRole::ProcessBusSwitch | NodeRole::StationBusSwitch => {
            let delay = if role == NodeRole::ProcessBusSwitch { d.t_sp } else { d.t_ss };
            let mut sw = SdnSwitch::new(spec.switch_table(name, ports)?, delay);
            if let Some(ctrl) = spec.switches.get(name).and_then(|s| s.controller.clone()) {
                sw = sw.with_controller(ctrl, spec.ids.control_latency_us);
            }
            Box::new(sw)
        }
    })
}

/// Builds the substation, runs it for the configured duration and scores
/// the resulting log.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioRun, ScenarioError> {
    spec.validate()?;
    let net = build_topology(&spec.topology).map_err(SimError::from)?;
    let header = ScenarioHeader::from_spec(spec)?;
    let mut sim = Simulator::new(net.clone());
    for node in net.nodes() {
        sim.add_behavior(&node.name, behavior_for(spec, &node.name, node.role, node.ports)?)?;
    }
    sim.record(
        EventKind::ScenarioStart,
        Subject::node(SCENARIO_SUBJECT),
        Some(EventDetail::Scenario(Box::new(header))),
    );

    for inj in &spec.injections {
        let frame = inj.template.build(&spec.pied);
        let times: Vec<SimTime> = inj.times_us.iter().map(|&t| SimTime(t)).collect();
        inject(&mut sim, inj.host, &frame, &inj.port, &times)?;
    }

    log::info!("running {} for {}", spec.scenario.id, SimTime(spec.scenario.duration_us));
    sim.run_until(SimTime(spec.scenario.duration_us));
    let events = sim.log().len() as u64;
    sim.record(EventKind::RunEnd, Subject::node(SCENARIO_SUBJECT), Some(EventDetail::RunEnd { events }));
    let log = sim.into_log();
    let result = score(&log)?;
    Ok(ScenarioRun { log, result })
}

/// Runs independent scenarios on up to `jobs` threads. Output order
/// follows input order.
pub fn run_many(specs: &[ScenarioSpec], jobs: usize) -> Vec<Result<ScenarioRun, ScenarioError>> {
    let jobs = jobs.max(1);
    let mut out: Vec<Option<Result<ScenarioRun, ScenarioError>>> = (0..specs.len()).map(|_| None).collect();
    for (chunk_specs, chunk_out) in specs.chunks(jobs).zip(out.chunks_mut(jobs)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk_specs.iter().map(|spec| s.spawn(move || run_scenario(spec))).collect();
            for (slot, h) in chunk_out.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("scenario thread panicked"));
            }
        });
    }
    out.into_iter().map(|r| r.expect("every slot filled")).collect()
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::codec::FrameDigest;
use crate::netsim::{Network, NodeRole, PortRef, SimTime};
use crate::sdn::ControllerMsg;

/// Candidate origins for an abnormal GOOSE frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Host {
    StationBusSwitch,
    Pied,
}

impl Host {
    pub fn role(self) -> NodeRole {
        match self {
            Host::StationBusSwitch => NodeRole::StationBusSwitch,
            Host::Pied => NodeRole::Pied,
        }
    }
}

/// IDS port assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdsPorts {
    /// Station bus traffic headed for the relay.
    pub bus_in: u8,
    /// Copy sent back into the station bus switch.
    pub loop_out: u8,
    /// Towards the Omicron.
    pub egress: u8,
    /// Process bus mirror.
    pub process_in: u8,
    /// Where the station bus switch returns the loop copy.
    pub loop_in: u8,
}

impl Default for IdsPorts {
    fn default() -> Self {
        IdsPorts { bus_in: 3, loop_out: 4, egress: 5, process_in: 6, loop_in: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub time: SimTime,
    pub origin_hypothesis: Host,
    pub ingress_ids_port: u8,
    pub digest: FrameDigest,
    #[serde(rename = "loop")]
    pub loop_copy: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalizationVerdict {
    pub culprit: Host,
    pub evidence: Vec<ObservationRecord>,
    pub decided_at: SimTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum VerdictOutcome {
    Verdict(LocalizationVerdict),
    Inconclusive { evidence: Vec<ObservationRecord>, decided_at: SimTime },
}

impl VerdictOutcome {
    pub fn verdict(&self) -> Option<&LocalizationVerdict> {
        match self {
            VerdictOutcome::Verdict(v) => Some(v),
            VerdictOutcome::Inconclusive { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LocalizeError {
    #[error("no abnormal observations to localize")]
    NoAbnormalObservations,
}

/// Decides which host emitted the abnormal frames.
///
/// A fresh (non-loop) arrival on the loop return port can only have come
/// from the station bus switch. If every return-port arrival is a loop copy
/// of something first seen on the bus port with the relay's identity, the
/// relay is to blame. Anything else is inconclusive.
pub fn localize(
    observations: &[ObservationRecord],
    ports: &IdsPorts,
    at: SimTime,
) -> Result<VerdictOutcome, LocalizeError> {
    if observations.is_empty() {
        return Err(LocalizeError::NoAbnormalObservations);
    }
    let relevant: Vec<&ObservationRecord> = observations
        .iter()
        .filter(|o| o.ingress_ids_port == ports.bus_in || o.ingress_ids_port == ports.loop_in)
        .collect();

    let fresh_return: BTreeSet<FrameDigest> =
        relevant.iter().filter(|o| o.ingress_ids_port == ports.loop_in && !o.loop_copy).map(|o| o.digest).collect();

    // a bus-port frame that also arrived fresh on the return port was
    // injected by the switch, whatever its source MAC claims
    let relabeled: Vec<ObservationRecord> = relevant
        .iter()
        .map(|o| {
            let mut o = (*o).clone();
            let fresh_on_return = o.ingress_ids_port == ports.loop_in && !o.loop_copy;
            if fresh_on_return || fresh_return.contains(&o.digest) {
                o.origin_hypothesis = Host::StationBusSwitch;
            }
            o
        })
        .collect();
    // loop copies inherit whatever their bus-port original was labeled
    let origin_of = |d: FrameDigest| {
        relabeled.iter().find(|o| o.ingress_ids_port == ports.bus_in && o.digest == d).map(|o| o.origin_hypothesis)
    };
    let relabeled: Vec<ObservationRecord> = relabeled
        .iter()
        .map(|o| {
            let mut o = o.clone();
            if o.loop_copy {
                if let Some(h) = origin_of(o.digest) {
                    o.origin_hypothesis = h;
                }
            }
            o
        })
        .collect();

    let bus_with = |h: Host| relabeled.iter().any(|o| o.ingress_ids_port == ports.bus_in && o.origin_hypothesis == h);
    let switch_row = !fresh_return.is_empty() || bus_with(Host::StationBusSwitch);
    let relay_row =
        bus_with(Host::Pied) && relabeled.iter().filter(|o| o.ingress_ids_port == ports.loop_in).all(|o| o.loop_copy);

    let culprit = match (switch_row, relay_row) {
        (true, false) => Host::StationBusSwitch,
        (false, true) => Host::Pied,
        _ => {
            log::info!("localization inconclusive (switch row {switch_row}, relay row {relay_row})");
            return Ok(VerdictOutcome::Inconclusive { evidence: relabeled, decided_at: at });
        }
    };
    let evidence: Vec<ObservationRecord> = relabeled.into_iter().filter(|o| o.origin_hypothesis == culprit).collect();
    Ok(VerdictOutcome::Verdict(LocalizationVerdict { culprit, evidence, decided_at: at }))
}

/// Port-disable plan for a verdict.
///
/// Every healthy node port facing the culprit goes down, and so does every
/// IDS port not connected to a healthy node. What stays up is the trusted
/// path from the process bus through the IDS to the Omicron.
pub fn mitigate(verdict: &LocalizationVerdict, net: &Network) -> Vec<ControllerMsg> {
    let role = verdict.culprit.role();
    let is_culprit = |node: &str| net.role_of(node) == Some(role);
    let mut down: BTreeSet<PortRef> = BTreeSet::new();

    for link in net.links() {
        for (near, far) in [(&link.a, &link.b), (&link.b, &link.a)] {
            if is_culprit(&far.node) && !is_culprit(&near.node) {
                down.insert(near.clone());
            }
        }
    }
    for ids in net.nodes_with_role(NodeRole::Ids) {
        for port in net.ports_of(&ids.name) {
            let healthy_peer = net.peer(&port).is_some_and(|p| !is_culprit(&p.node));
            if !healthy_peer {
                down.insert(port);
            }
        }
    }
    down.into_iter().map(|p| ControllerMsg::port_mod(&p, false)).collect()
}

//! End-to-end fault-to-trip latency: configured components, measurement
//! from the event log, and budget checks.
//!
//! Measurement walks `cause` pointers back from the first `BreakerTrip` to
//! the `Sampled` event that started the chain. Every interval on the way is
//! charged to exactly one component, so the measured components always add
//! up to the end-to-end figure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::netsim::{EventDetail, EventKind, EventLog, NodeRole, SimEvent, SimTime};

/// Per-component delays in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayComponents {
    pub t_mu: u64,
    pub t_sv: u64,
    pub t_sp: u64,
    pub t_pied: u64,
    pub t_ss: u64,
    pub t_gs: u64,
    pub t_oc: u64,
    pub t_ids: u64,
    pub with_ids: bool,
}

impl DelayComponents {
    pub fn base_sum(&self) -> u64 {
        self.t_mu + self.t_sv + self.t_sp + self.t_pied + self.t_ss + self.t_gs + self.t_oc
    }
}

/// Sum of the base terms, plus `t_ids` when the IDS is in the path.
pub fn total(c: &DelayComponents) -> u64 {
    c.base_sum() + if c.with_ids { c.t_ids } else { 0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayBudget {
    /// Exact expected total without the IDS.
    pub baseline_us: u64,
    pub with_ids_max_us: u64,
    pub ids_added_max_us: u64,
    /// Grid frequency for the quarter-cycle bound on the IDS delay.
    pub grid_hz: u64,
}

impl Default for DelayBudget {
    fn default() -> Self {
        DelayBudget { baseline_us: 23_000, with_ids_max_us: 27_000, ids_added_max_us: 4_000, grid_hz: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetCheck {
    pub name: String,
    pub value_us: u64,
    pub limit: String,
    pub passed: bool,
}

impl BudgetCheck {
    fn new(name: &str, value_us: u64, limit: String, passed: bool) -> Self {
        BudgetCheck { name: name.to_owned(), value_us, limit, passed }
    }
}

impl DelayBudget {
    /// `t_ids` is below a quarter of one grid cycle.
    pub fn within_quarter_cycle(&self, t_ids_us: u64) -> bool {
        4 * self.grid_hz * t_ids_us <= 1_000_000
    }

    pub fn check(&self, measured: &DelayComponents, total_us: u64, end_to_end_us: u64) -> Vec<BudgetCheck> {
        let mut checks =
            vec![BudgetCheck::new("additivity", total_us, format!("== {end_to_end_us}"), total_us == end_to_end_us)];
        if measured.with_ids {
            checks.push(BudgetCheck::new(
                "with_ids_total",
                total_us,
                format!("<= {}", self.with_ids_max_us),
                total_us <= self.with_ids_max_us,
            ));
            checks.push(BudgetCheck::new(
                "ids_added",
                measured.t_ids,
                format!("<= {}", self.ids_added_max_us),
                measured.t_ids <= self.ids_added_max_us,
            ));
            checks.push(BudgetCheck::new(
                "ids_quarter_cycle",
                measured.t_ids,
                format!("<= 1/(4*{}Hz)", self.grid_hz),
                self.within_quarter_cycle(measured.t_ids),
            ));
        } else {
            checks.push(BudgetCheck::new(
                "baseline_total",
                total_us,
                format!("== {}", self.baseline_us),
                total_us == self.baseline_us,
            ));
        }
        checks
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayReport {
    pub components: DelayComponents,
    pub total_us: u64,
    pub fault_sample_time: SimTime,
    pub trip_time: SimTime,
    pub checks: Vec<BudgetCheck>,
}

impl DelayReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DelayError {
    #[error("log contains no BreakerTrip")]
    NoTripFound,
    #[error("log has no scenario header")]
    MissingHeader,
    #[error("cause chain broken at event {0}")]
    BrokenChain(u64),
    #[error("no delay component for residence at `{0}`")]
    UnattributedNode(String),
}

/// Measures the first fault-to-trip chain, reading node roles and budget
/// from the log's scenario header.
pub fn measure(log: &EventLog) -> Result<DelayReport, DelayError> {
    let header = log
        .iter()
        .find_map(|e| match &e.detail {
            Some(EventDetail::Scenario(h)) => Some(h),
            _ => None,
        })
        .ok_or(DelayError::MissingHeader)?;
    measure_with(log, &header.roles(), header.delays.with_ids, &header.budget)
}

pub fn measure_with(
    log: &EventLog,
    roles: &BTreeMap<String, NodeRole>,
    with_ids: bool,
    budget: &DelayBudget,
) -> Result<DelayReport, DelayError> {
    let trip = log.of_kind(EventKind::BreakerTrip).next().ok_or(DelayError::NoTripFound)?;
    let cause_of = |e: &SimEvent| -> Result<&SimEvent, DelayError> {
        e.cause.and_then(|c| log.get(c)).filter(|c| c.seq < e.seq).ok_or(DelayError::BrokenChain(e.seq))
    };

    let mut m = DelayComponents { with_ids, ..Default::default() };
    let arrival = cause_of(trip)?;
    if arrival.kind != EventKind::FrameArrival {
        return Err(DelayError::BrokenChain(trip.seq));
    }
    m.t_oc += trip.time.saturating_sub(arrival.time);

    // walking backwards, links are GOOSE until the relay is passed
    let mut before_relay = true;
    let mut cur = arrival;
    let sample = loop {
        let departure = cause_of(cur)?;
        if departure.kind != EventKind::FrameDeparture {
            return Err(DelayError::BrokenChain(cur.seq));
        }
        let link = cur.time.saturating_sub(departure.time);
        if before_relay {
            m.t_gs += link;
        } else {
            m.t_sv += link;
        }
        let origin = cause_of(departure)?;
        let residence = departure.time.saturating_sub(origin.time);
        let node = &departure.subject.node;
        match origin.kind {
            EventKind::Sampled => {
                m.t_mu += residence;
                break origin;
            }
            EventKind::FrameArrival if origin.subject.node == *node => {
                let slot = match roles.get(node) {
                    Some(NodeRole::ProcessBusSwitch) => &mut m.t_sp,
                    Some(NodeRole::StationBusSwitch) => &mut m.t_ss,
                    Some(NodeRole::Ids) => &mut m.t_ids,
                    Some(NodeRole::Pied) => {
                        before_relay = false;
                        &mut m.t_pied
                    }
                    _ => return Err(DelayError::UnattributedNode(node.clone())),
                };
                *slot += residence;
                cur = origin;
            }
            _ => return Err(DelayError::BrokenChain(departure.seq)),
        }
    };

    let total_us = total(&m);
    let end_to_end = trip.time.saturating_sub(sample.time);
    Ok(DelayReport {
        components: m,
        total_us,
        fault_sample_time: sample.time,
        trip_time: trip.time,
        checks: budget.check(&m, total_us, end_to_end),
    })
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::codec::FrameDigest;
use crate::delay::{measure, total, DelayReport};
use crate::ids::{LocalizationVerdict, VerdictOutcome};
use crate::netsim::{EventDetail, EventKind, EventLog, NodeRole, PortRef, SimEvent, SimTime};

use super::config::ScenarioId;
use super::run::ScenarioHeader;
use super::trace::verify_forwarding_trace;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("log does not start with a scenario header")]
    MissingHeader,
    #[error("log is incomplete: no RunEnd marker")]
    MissingRunEnd,
    #[error("RunEnd records {recorded} events but the log holds {actual}")]
    CountMismatch { recorded: u64, actual: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: ScenarioId,
    pub passed: bool,
    /// Names of failed checks.
    pub reasons: Vec<String>,
    pub checks: Vec<Check>,
    pub verdict: Option<LocalizationVerdict>,
    pub inconclusive_decisions: usize,
    pub alerts: usize,
    pub injected: usize,
    pub injected_reaching_ids: usize,
    pub injected_alerted: usize,
    pub recall: Option<f64>,
    pub mitigation_time: Option<SimTime>,
    pub disabled_ports: Vec<PortRef>,
    pub enabled_ids_ports: Vec<u8>,
    pub breaker_trips: usize,
    pub abnormal_to_omicron_after_mitigation: usize,
    pub isolated_frames_after_mitigation: Option<usize>,
    pub healthy_frames_after_mitigation: usize,
    pub delay: Option<DelayReport>,
    pub events: usize,
}

impl ScenarioResult {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn header(log: &EventLog) -> Result<&ScenarioHeader, ScoreError> {
    match log.events().first().and_then(|e| e.detail.as_ref()) {
        Some(EventDetail::Scenario(h)) => Ok(h),
        _ => Err(ScoreError::MissingHeader),
    }
}

fn check_complete(log: &EventLog) -> Result<(), ScoreError> {
    let last = log.events().last().ok_or(ScoreError::MissingRunEnd)?;
    match last.detail {
        Some(EventDetail::RunEnd { events }) if last.kind == EventKind::RunEnd => {
            let actual = log.len() as u64 - 1;
            if events == actual {
                Ok(())
            } else {
                Err(ScoreError::CountMismatch { recorded: events, actual })
            }
        }
        _ => Err(ScoreError::MissingRunEnd),
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(Check { name: name.to_owned(), passed, detail: detail.into() });
    }
}

/// Scores a complete scenario log. Depends on nothing but the log, so a
/// saved log re-scores to the same result.
pub fn score(log: &EventLog) -> Result<ScenarioResult, ScoreError> {
    let header = header(log)?;
    check_complete(log)?;
    let expect = &header.expect;
    let names_with = |role: NodeRole| -> BTreeSet<&str> { header.nodes_with_role(role).collect() };
    let ids_nodes = names_with(NodeRole::Ids);
    let omicrons = names_with(NodeRole::Omicron);

    let injected: BTreeMap<FrameDigest, SimTime> =
        log.of_kind(EventKind::Injected).filter_map(|e| Some((e.digest?, e.time))).collect();
    let alerts: Vec<&SimEvent> = log.of_kind(EventKind::AlertRaised).collect();
    let alerted: BTreeSet<FrameDigest> = alerts.iter().filter_map(|e| e.digest).collect();
    let reached_ids: BTreeSet<FrameDigest> = log
        .of_kind(EventKind::FrameArrival)
        .filter(|e| ids_nodes.contains(e.subject.node.as_str()))
        .filter_map(|e| e.digest)
        .filter(|d| injected.contains_key(d))
        .collect();
    let injected_alerted = reached_ids.iter().filter(|d| alerted.contains(d)).count();
    let recall = (!reached_ids.is_empty()).then(|| injected_alerted as f64 / reached_ids.len() as f64);

    let outcomes: Vec<&VerdictOutcome> = log
        .of_kind(EventKind::VerdictReached)
        .filter_map(|e| match &e.detail {
            Some(EventDetail::Verdict(v)) => Some(v),
            _ => None,
        })
        .collect();
    let verdict = outcomes.iter().find_map(|o| o.verdict()).cloned();
    let inconclusive_decisions = outcomes.iter().filter(|o| o.verdict().is_none()).count();

    let mut disabled: BTreeSet<PortRef> = BTreeSet::new();
    let mut mitigation_time = None;
    for e in log.of_kind(EventKind::PortStateChange) {
        let (Some(port), Some(EventDetail::PortState { enabled })) = (e.subject.port_ref(), &e.detail) else {
            continue;
        };
        if *enabled {
            disabled.remove(&port);
        } else {
            mitigation_time.get_or_insert(e.time);
            disabled.insert(port);
        }
    }
    let ids_ports: Vec<u8> = header
        .topology
        .nodes
        .iter()
        .filter(|n| n.role == NodeRole::Ids)
        .flat_map(|n| (1..=n.ports).filter(|p| !disabled.contains(&PortRef::new(n.name.clone(), *p))))
        .collect();

    let trips: Vec<&SimEvent> = log.of_kind(EventKind::BreakerTrip).collect();
    let abnormal =
        |e: &SimEvent| e.flagged() || e.digest.is_some_and(|d| alerted.contains(&d) || injected.contains_key(&d));
    // a frame counts as post-mitigation when it was sent after the last
    // port change of the mitigation batch; earlier frames may still land
    let mitigation_seq = mitigation_time
        .and_then(|t| log.of_kind(EventKind::PortStateChange).filter(|e| e.time == t).map(|e| e.seq).max());
    let sent_after = |e: &&SimEvent| mitigation_seq.is_some_and(|m| e.cause.is_some_and(|c| c > m));
    let arrivals_after: Vec<&SimEvent> = log.of_kind(EventKind::FrameArrival).filter(sent_after).collect();
    let abnormal_to_omicron =
        arrivals_after.iter().filter(|e| omicrons.contains(e.subject.node.as_str()) && abnormal(e)).count();

    // frames touching a node: arriving at it, or having departed from it
    let sender = |e: &SimEvent| e.cause.and_then(|c| log.get(c)).map(|d| d.subject.node.as_str());
    let isolated = expect.isolated.map(|h| names_with(h.role()));
    let touches = |e: &SimEvent, set: &BTreeSet<&str>| {
        set.contains(e.subject.node.as_str()) || sender(e).is_some_and(|s| set.contains(s))
    };
    let isolated_frames = isolated.as_ref().map(|set| arrivals_after.iter().filter(|e| touches(e, set)).count());
    let culprit_nodes: BTreeSet<&str> = verdict.as_ref().map(|v| names_with(v.culprit.role())).unwrap_or_default();
    let healthy_frames = arrivals_after.iter().filter(|e| !touches(e, &culprit_nodes)).count();

    let delay = if trips.is_empty() { None } else { measure(log).ok() };

    let mut c = Checks(Vec::new());
    match expect.verdict {
        Some(h) => c.push(
            "verdict",
            verdict.as_ref().is_some_and(|v| v.culprit == h),
            format!("expected {h:?}, got {:?}", verdict.as_ref().map(|v| v.culprit)),
        ),
        None => c.push("verdict", outcomes.is_empty(), format!("expected no decision, got {}", outcomes.len())),
    }
    if let Some(n) = expect.alerts {
        c.push("alerts", alerts.len() == n, format!("expected {n}, got {}", alerts.len()));
    }
    c.push(
        "breaker_trips",
        trips.len() == expect.breaker_trips as usize,
        format!("expected {}, got {}", expect.breaker_trips, trips.len()),
    );
    let tripped_by_abnormal =
        trips.iter().filter_map(|t| t.cause.and_then(|c| log.get(c))).filter(|arr| abnormal(arr)).count();
    c.push(
        "no_trip_from_abnormal",
        tripped_by_abnormal == 0,
        format!("{tripped_by_abnormal} trips from abnormal frames"),
    );
    if let Some(want) = &expect.enabled_ids_ports {
        c.push("enabled_ids_ports", &ids_ports == want, format!("expected {want:?}, got {ids_ports:?}"));
    }
    if !expect.disabled_ports.is_empty() {
        let missing: Vec<String> =
            expect.disabled_ports.iter().filter(|p| !disabled.contains(p)).map(|p| p.to_string()).collect();
        c.push("disabled_ports", missing.is_empty(), format!("still enabled: {missing:?}"));
    }
    if !expect.evidence_ports.is_empty() {
        let seen: BTreeSet<u8> = verdict.iter().flat_map(|v| v.evidence.iter().map(|o| o.ingress_ids_port)).collect();
        let ok = expect.evidence_ports.iter().all(|p| seen.contains(p));
        c.push("evidence_ports", ok, format!("expected {:?}, evidence at {seen:?}", expect.evidence_ports));
    }
    if !injected.is_empty() {
        c.push(
            "recall",
            recall == Some(1.0),
            format!("{injected_alerted}/{} injected frames reaching the IDS were alerted", reached_ids.len()),
        );
        let leaked: Vec<String> = injected
            .iter()
            .filter(|(d, t)| mitigation_time.is_some_and(|m| **t >= m) && reached_ids.contains(d))
            .map(|(d, _)| d.to_string())
            .collect();
        c.push(
            "blocked_after_mitigation",
            mitigation_time.is_some() && leaked.is_empty(),
            format!("mitigation at {mitigation_time:?}; leaked {leaked:?}"),
        );
        c.push(
            "no_abnormal_to_omicron_after_mitigation",
            abnormal_to_omicron == 0,
            format!("{abnormal_to_omicron} abnormal frames reached the Omicron"),
        );
    }
    if let Some(n) = isolated_frames {
        c.push("isolated", mitigation_time.is_some() && n == 0, format!("{n} frames to/from the isolated host"));
        c.push("healthy_traffic", healthy_frames > 0, format!("{healthy_frames} frames among healthy nodes"));
    }
    if expect.delay_budget {
        let configured = total(&header.delays);
        let (ok, detail) = match &delay {
            Some(r) => (
                r.passed() && r.total_us == configured,
                format!("measured {}us, configured {configured}us, failed checks {:?}", r.total_us, failed_budget(r)),
            ),
            None => (false, "no measurable fault-to-trip chain".to_owned()),
        };
        c.push("delay_budget", ok, detail);
    }
    if !expect.trace.is_empty() {
        let first = injected.iter().min_by_key(|(d, t)| (**t, **d)).map(|(d, _)| *d);
        let ok = first.is_some_and(|d| verify_forwarding_trace(log, d, &expect.trace));
        let hops: Vec<String> = expect.trace.iter().map(|h| h.to_string()).collect();
        c.push("forwarding_trace", ok, hops.join(" -> "));
    }

    let checks = c.0;
    let reasons: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    Ok(ScenarioResult {
        scenario: header.scenario,
        passed: reasons.is_empty(),
        reasons,
        checks,
        verdict,
        inconclusive_decisions,
        alerts: alerts.len(),
        injected: injected.len(),
        injected_reaching_ids: reached_ids.len(),
        injected_alerted,
        recall,
        mitigation_time,
        disabled_ports: disabled.into_iter().collect(),
        enabled_ids_ports: ids_ports,
        breaker_trips: trips.len(),
        abnormal_to_omicron_after_mitigation: abnormal_to_omicron,
        isolated_frames_after_mitigation: isolated_frames,
        healthy_frames_after_mitigation: healthy_frames,
        delay,
        events: log.len(),
    })
}

fn failed_budget(r: &DelayReport) -> Vec<&str> {
    r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
}

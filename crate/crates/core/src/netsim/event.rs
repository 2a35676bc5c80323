use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::codec::FrameDigest;
use crate::ids::{Alert, Host, VerdictOutcome};
use crate::scenarios::ScenarioHeader;
use crate::sdn::ControllerMsg;

use super::PortRef;

/// Simulation clock in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_us(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn as_us(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, other: SimTime) -> u64 {
        self.0.saturating_sub(other.0)
    }
}

/// Adds a delay in microseconds.
impl Add<u64> for SimTime {
    type Output = SimTime;

    fn add(self, us: u64) -> SimTime {
        SimTime(self.0 + us)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}ms", self.0 / 1_000, self.0 % 1_000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    ScenarioStart,
    Sampled,
    Injected,
    FrameDeparture,
    FrameArrival,
    FrameDrop,
    ControlMsg,
    PortStateChange,
    AlertRaised,
    VerdictReached,
    BreakerTrip,
    RunEnd,
}

/// Node, optionally narrowed to one of its ports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subject {
    pub node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<u8>,
}

impl Subject {
    pub fn node(node: impl Into<String>) -> Self {
        Subject { node: node.into(), port: None }
    }

    pub fn port_ref(&self) -> Option<PortRef> {
        self.port.map(|p| PortRef::new(self.node.clone(), p))
    }

    pub fn is_port(&self, port: &PortRef) -> bool {
        self.port == Some(port.port) && self.node == port.node
    }
}

impl From<&PortRef> for Subject {
    fn from(p: &PortRef) -> Self {
        Subject { node: p.node.clone(), port: Some(p.port) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    PortDisabled,
    NoMatchingFlow,
    DropAction,
    Unlinked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "snake_case")]
pub enum EventDetail {
    Scenario(Box<ScenarioHeader>),
    Frame { flagged: bool },
    Drop { reason: DropReason },
    Injected { host: Host },
    Alert(Alert),
    Verdict(VerdictOutcome),
    Control(ControllerMsg),
    PortState { enabled: bool },
    RunEnd { events: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
    pub subject: Subject,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<FrameDigest>,
    /// `seq` of the event that caused this one, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<EventDetail>,
}

impl SimEvent {
    pub fn flagged(&self) -> bool {
        matches!(self.detail, Some(EventDetail::Frame { flagged: true }))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("line {line}: event ({time}, {seq}) is out of order")]
    OutOfOrder { line: usize, time: SimTime, seq: u64 },
}

/// Append-only, ordered by `(time, seq)`. `seq` equals the index of the event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    events: Vec<SimEvent>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    pub(crate) fn append(
        &mut self,
        time: SimTime,
        kind: EventKind,
        subject: Subject,
        digest: Option<FrameDigest>,
        cause: Option<u64>,
        detail: Option<EventDetail>,
    ) -> u64 {
        if let Some(last) = self.events.last() {
            assert!(time >= last.time, "event log must be time-ordered");
        }
        let seq = self.next_seq();
        self.events.push(SimEvent { time, seq, kind, subject, digest, cause, detail });
        seq
    }

    pub fn events(&self) -> &[SimEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, seq: u64) -> Option<&SimEvent> {
        self.events.get(usize::try_from(seq).ok()?)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SimEvent> {
        self.events.iter()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &SimEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), LogError> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<EventLog, LogError> {
        let mut log = EventLog::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: SimEvent =
                serde_json::from_str(&line).map_err(|source| LogError::Parse { line: i + 1, source })?;
            let in_order = match log.events.last() {
                Some(last) => (event.time, event.seq) > (last.time, last.seq),
                None => true,
            };
            if !in_order || event.seq != log.next_seq() {
                return Err(LogError::OutOfOrder { line: i + 1, time: event.time, seq: event.seq });
            }
            log.events.push(event);
        }
        Ok(log)
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::FrameDigest;
use crate::netsim::{EventKind, EventLog, SimEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopDir {
    /// Frame arrives at the port.
    In,
    /// Frame leaves through the port.
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub dir: HopDir,
    pub node: String,
    pub port: u8,
}

impl Hop {
    pub fn arrive(node: &str, port: u8) -> Self {
        Hop { dir: HopDir::In, node: node.into(), port }
    }

    pub fn depart(node: &str, port: u8) -> Self {
        Hop { dir: HopDir::Out, node: node.into(), port }
    }

    fn matches(&self, e: &SimEvent) -> bool {
        let kind = match self.dir {
            HopDir::In => EventKind::FrameArrival,
            HopDir::Out => EventKind::FrameDeparture,
        };
        e.kind == kind && e.subject.node == self.node && e.subject.port == Some(self.port)
    }
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.dir {
            HopDir::In => "in",
            HopDir::Out => "out",
        };
        write!(f, "{dir} {}:{}", self.node, self.port)
    }
}

/// True iff `expected` occurs, in order, among the arrival and departure
/// events carrying `digest`. Other hops may be interleaved.
pub fn verify_forwarding_trace(log: &EventLog, digest: FrameDigest, expected: &[Hop]) -> bool {
    let mut want = expected.iter().peekable();
    for e in log.iter().filter(|e| e.digest == Some(digest)) {
        match want.peek() {
            Some(h) if h.matches(e) => {
                want.next();
            }
            Some(_) => {}
            None => break,
        }
    }
    want.peek().is_none()
}

//! Deterministic discrete-event network engine.
//!
//! Nodes have numbered ports joined by point-to-point links with fixed
//! latency. Every frame hop and control action is appended to an
//! [`EventLog`]; each event may point at the event that caused it, which is
//! what delay attribution walks.

mod engine;
mod event;
mod topology;

pub use engine::{NodeBehavior, NodeCtx, SimError, SimFrame, Simulator};
pub use event::{DropReason, EventDetail, EventKind, EventLog, LogError, SimEvent, SimTime, Subject};
pub use topology::{build_topology, Link, LinkSpec, Network, NodeRole, NodeSpec, PortRef, TopologyError, TopologySpec};

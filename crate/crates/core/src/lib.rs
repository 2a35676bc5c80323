//! Deterministic simulation of a substation network where an IDS sits
//! between an SDN station bus and the breaker-actuating Omicron.
//!
//! A merging unit streams SV samples to a protection relay, the relay
//! publishes GOOSE trip commands, and the IDS inspects, loops back and
//! localizes abnormal publications before isolating their source.

pub mod cli;
pub mod codec;
pub mod delay;
pub mod devices;
pub mod ids;
pub mod netsim;
pub mod scenarios;
pub mod sdn;

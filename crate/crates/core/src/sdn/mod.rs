//! OpenFlow-style switching: multi-match flow tables and the controller
//! message channel.

mod flow;
mod switch;

pub use flow::{Action, DefaultAction, FlowEntry, FlowError, FlowModCommand, FlowTable, MatchFields};
pub use switch::{apply_port_mod, ControllerMsg, Emission, SdnSwitch};

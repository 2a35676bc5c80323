use serde::{Deserialize, Serialize};

use crate::codec::{FrameDigest, RawFrame};
use crate::netsim::{
    DropReason, EventDetail, EventKind, NodeBehavior, NodeCtx, PortRef, SimError, SimFrame, SimTime, Simulator,
};

use super::flow::{Action, FlowEntry, FlowModCommand, FlowTable};

/// Messages on the controller channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMsg {
    PacketIn { switch: String, controller: String, ingress: u8, digest: FrameDigest },
    FlowMod { switch: String, command: FlowModCommand, entry: FlowEntry },
    PortMod { switch: String, port: u8, enable: bool },
}

impl ControllerMsg {
    pub fn port_mod(port: &PortRef, enable: bool) -> Self {
        ControllerMsg::PortMod { switch: port.node.clone(), port: port.port, enable }
    }
}

/// What a switch does with one received frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Emission {
    Forward { port: u8, at: SimTime },
    PacketIn { at: SimTime },
    Drop(DropReason),
}

#[derive(Debug, Clone)]
pub struct SdnSwitch {
    pub table: FlowTable,
    pub processing_delay_us: u64,
    pub controller: Option<String>,
    pub control_latency_us: u64,
}

impl SdnSwitch {
    pub fn new(table: FlowTable, processing_delay_us: u64) -> Self {
        SdnSwitch { table, processing_delay_us, controller: None, control_latency_us: 0 }
    }

    pub fn with_controller(mut self, controller: impl Into<String>, latency_us: u64) -> Self {
        self.controller = Some(controller.into());
        self.control_latency_us = latency_us;
        self
    }

    /// Pure forwarding decision for a frame arriving at `at`.
    pub fn process_frame(&self, raw: &RawFrame, ingress: u8, at: SimTime) -> Vec<Emission> {
        let actions = self.table.match_frame(raw, ingress);
        if actions.is_empty() {
            return vec![Emission::Drop(DropReason::NoMatchingFlow)];
        }
        let depart = at + self.processing_delay_us;
        actions
            .into_iter()
            .map(|a| match a {
                Action::Forward(port) => Emission::Forward { port, at: depart },
                Action::ToController => Emission::PacketIn { at: at + self.control_latency_us },
                Action::Drop => Emission::Drop(DropReason::DropAction),
            })
            .collect()
    }
}

impl NodeBehavior for SdnSwitch {
    fn on_frame(&mut self, ctx: &mut NodeCtx<'_>, ingress: u8, frame: &SimFrame, arrival: u64) {
        for emission in self.process_frame(&frame.raw, ingress, ctx.now()) {
            match emission {
                Emission::Forward { port, at } => {
                    if let Err(SimError::UnlinkedPort(_)) = ctx.send(port, frame.clone(), at, Some(arrival)) {
                        ctx.record(
                            EventKind::FrameDrop,
                            Some(port),
                            Some(&frame.raw),
                            Some(arrival),
                            Some(EventDetail::Drop { reason: DropReason::Unlinked }),
                        );
                    }
                }
                Emission::PacketIn { at } => {
                    if let Some(controller) = self.controller.clone() {
                        let msg = ControllerMsg::PacketIn {
                            switch: ctx.node().to_owned(),
                            controller,
                            ingress,
                            digest: frame.raw.digest(),
                        };
                        if let Err(e) = ctx.send_control(msg, at) {
                            log::warn!("{}: packet-in not delivered: {e}", ctx.node());
                        }
                    } else {
                        ctx.record(
                            EventKind::FrameDrop,
                            Some(ingress),
                            Some(&frame.raw),
                            Some(arrival),
                            Some(EventDetail::Drop { reason: DropReason::NoMatchingFlow }),
                        );
                    }
                }
                Emission::Drop(reason) => {
                    ctx.record(
                        EventKind::FrameDrop,
                        Some(ingress),
                        Some(&frame.raw),
                        Some(arrival),
                        Some(EventDetail::Drop { reason }),
                    );
                }
            }
        }
    }

    fn on_control(&mut self, ctx: &mut NodeCtx<'_>, msg: &ControllerMsg, _seq: u64) {
        if let ControllerMsg::FlowMod { command, entry, .. } = msg {
            let ports = ctx.network().node(ctx.node()).map_or(0, |n| n.ports);
            let updated =
                FlowTable::validate_entry(entry, ports).and_then(|_| self.table.apply_flow_mod(*command, entry));
            match updated {
                Ok(table) => self.table = table,
                Err(e) => log::warn!("{}: flow-mod rejected: {e}", ctx.node()),
            }
        }
    }
}

/// Sends a PortMod through the controller channel; it takes effect at `at`.
pub fn apply_port_mod(sim: &mut Simulator, port: &PortRef, enable: bool, at: SimTime) -> Result<(), SimError> {
    sim.send_control(ControllerMsg::port_mod(port, enable), at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdn::flow::{DefaultAction, MatchFields};

    #[test]
    fn departure_time_is_arrival_plus_delay() {
        let table = FlowTable::from_entries(
            vec![FlowEntry::new(
                1,
                MatchFields { ingress_port: Some(1), ..Default::default() },
                vec![Action::Forward(2)],
            )],
            DefaultAction::Drop,
            4,
        )
        .unwrap();
        let sw = SdnSwitch::new(table, 1_000);
        let raw = RawFrame::new(vec![0; 20]);
        assert_eq!(sw.process_frame(&raw, 1, SimTime(250)), vec![Emission::Forward { port: 2, at: SimTime(1_250) }]);
        assert_eq!(sw.process_frame(&raw, 3, SimTime(250)), vec![Emission::Drop(DropReason::NoMatchingFlow)]);
    }
}

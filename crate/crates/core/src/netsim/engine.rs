use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::codec::RawFrame;
use crate::ids::Host;
use crate::sdn::ControllerMsg;

use super::event::{DropReason, EventDetail, EventKind, EventLog, SimTime, Subject};
use super::{Network, PortRef, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("port {0} has no link")]
    UnlinkedPort(PortRef),
    #[error("unknown port: {0}")]
    UnknownPort(#[from] TopologyError),
    #[error("no node `{0}`")]
    UnknownNode(String),
    #[error("cannot schedule at {at}, clock is already at {now}")]
    InThePast { at: SimTime, now: SimTime },
}

/// A frame in flight, plus the IDS "abnormal" flag that rides alongside the
/// bytes without changing them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimFrame {
    pub raw: RawFrame,
    pub flagged: bool,
}

impl SimFrame {
    pub fn new(raw: RawFrame) -> Self {
        SimFrame { raw, flagged: false }
    }

    pub fn flagged(raw: RawFrame) -> Self {
        SimFrame { raw, flagged: true }
    }
}

/// Behavior attached to a node. All callbacks run on the engine thread.
pub trait NodeBehavior: Send {
    fn on_start(&mut self, _ctx: &mut NodeCtx<'_>) {}

    /// `arrival` is the `seq` of the logged FrameArrival.
    fn on_frame(&mut self, ctx: &mut NodeCtx<'_>, ingress: u8, frame: &SimFrame, arrival: u64);

    fn on_timer(&mut self, _ctx: &mut NodeCtx<'_>, _token: u64) {}

    /// FlowMod and PacketIn deliveries. `seq` is the logged ControlMsg.
    fn on_control(&mut self, _ctx: &mut NodeCtx<'_>, _msg: &ControllerMsg, _seq: u64) {}
}

enum Pending {
    Departure { from: PortRef, frame: SimFrame, cause: Option<u64> },
    Arrival { at: PortRef, frame: SimFrame, cause: u64 },
    Timer { node: String, token: u64 },
    Control { msg: ControllerMsg },
    PortState { port: PortRef, enabled: bool, cause: Option<u64> },
    Injection { host: Host, port: PortRef, frame: SimFrame },
}

struct Queued {
    time: SimTime,
    order: u64,
    item: Pending,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.order) == (other.time, other.order)
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // BinaryHeap is a max-heap; invert so the earliest (time, order) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.order).cmp(&(self.time, self.order))
    }
}

/// Engine state shared with node callbacks through [`NodeCtx`].
pub struct Core {
    net: Network,
    now: SimTime,
    queue: BinaryHeap<Queued>,
    order: u64,
    log: EventLog,
    disabled: BTreeSet<PortRef>,
}

impl Core {
    fn push(&mut self, time: SimTime, item: Pending) {
        self.queue.push(Queued { time, order: self.order, item });
        self.order += 1;
    }

    fn check_future(&self, at: SimTime) -> Result<(), SimError> {
        if at < self.now {
            return Err(SimError::InThePast { at, now: self.now });
        }
        Ok(())
    }

    pub fn port_enabled(&self, port: &PortRef) -> bool {
        !self.disabled.contains(port)
    }

    fn log(
        &mut self,
        kind: EventKind,
        subject: Subject,
        raw: Option<&RawFrame>,
        cause: Option<u64>,
        detail: Option<EventDetail>,
    ) -> u64 {
        let digest = raw.map(RawFrame::digest);
        self.log.append(self.now, kind, subject, digest, cause, detail)
    }

    fn set_port(&mut self, port: PortRef, enabled: bool, cause: Option<u64>) {
        let subject = Subject::from(&port);
        if enabled {
            self.disabled.remove(&port);
        } else {
            self.disabled.insert(port);
        }
        self.log(EventKind::PortStateChange, subject, None, cause, Some(EventDetail::PortState { enabled }));
    }

    fn depart(&mut self, from: PortRef, frame: SimFrame, cause: Option<u64>) {
        let dep = self.log(
            EventKind::FrameDeparture,
            Subject::from(&from),
            Some(&frame.raw),
            cause,
            Some(EventDetail::Frame { flagged: frame.flagged }),
        );
        let link = self.net.link_of(&from).expect("departures are only queued on linked ports");
        let far = link.far_end(&from).expect("port belongs to its own link").clone();
        let arrive_at = self.now + link.latency_us;
        if self.port_enabled(&from) && self.port_enabled(&far) {
            self.push(arrive_at, Pending::Arrival { at: far, frame, cause: dep });
        } else {
            self.log(
                EventKind::FrameDrop,
                Subject::from(&from),
                Some(&frame.raw),
                Some(dep),
                Some(EventDetail::Drop { reason: DropReason::PortDisabled }),
            );
        }
    }
}

/// Handle passed to node callbacks.
pub struct NodeCtx<'a> {
    core: &'a mut Core,
    node: &'a str,
}

impl NodeCtx<'_> {
    pub fn now(&self) -> SimTime {
        self.core.now
    }

    pub fn node(&self) -> &str {
        self.node
    }

    pub fn network(&self) -> &Network {
        &self.core.net
    }

    pub fn port_enabled(&self, port: u8) -> bool {
        self.core.port_enabled(&PortRef::new(self.node, port))
    }

    /// Queues a departure from one of this node's ports at `at`.
    pub fn send(&mut self, port: u8, frame: SimFrame, at: SimTime, cause: Option<u64>) -> Result<(), SimError> {
        let from = PortRef::new(self.node, port);
        self.core.check_future(at)?;
        if self.core.net.link_of(&from).is_none() {
            return Err(SimError::UnlinkedPort(from));
        }
        self.core.push(at, Pending::Departure { from, frame, cause });
        Ok(())
    }

    pub fn schedule_timer(&mut self, at: SimTime, token: u64) -> Result<(), SimError> {
        self.core.check_future(at)?;
        self.core.push(at, Pending::Timer { node: self.node.to_owned(), token });
        Ok(())
    }

    /// Delivers a controller message to its target switch at `at`.
    pub fn send_control(&mut self, msg: ControllerMsg, at: SimTime) -> Result<(), SimError> {
        self.core.check_future(at)?;
        validate_control(&self.core.net, &msg)?;
        self.core.push(at, Pending::Control { msg });
        Ok(())
    }

    /// Appends an event for this node at the current time.
    pub fn record(
        &mut self,
        kind: EventKind,
        port: Option<u8>,
        raw: Option<&RawFrame>,
        cause: Option<u64>,
        detail: Option<EventDetail>,
    ) -> u64 {
        let subject = Subject { node: self.node.to_owned(), port };
        self.core.log(kind, subject, raw, cause, detail)
    }
}

fn validate_control(net: &Network, msg: &ControllerMsg) -> Result<(), SimError> {
    match msg {
        ControllerMsg::PortMod { switch, port, .. } => net.check_port(&PortRef::new(switch.clone(), *port))?,
        ControllerMsg::FlowMod { switch, .. } | ControllerMsg::PacketIn { switch, .. } => {
            if net.node(switch).is_none() {
                return Err(SimError::UnknownNode(switch.clone()));
            }
        }
    }
    if let ControllerMsg::PacketIn { controller, .. } = msg {
        if net.node(controller).is_none() {
            return Err(SimError::UnknownNode(controller.clone()));
        }
    }
    Ok(())
}

/// Single-threaded discrete-event engine. Events with equal time run in
/// insertion order, so identical inputs give identical logs.
pub struct Simulator {
    core: Core,
    behaviors: BTreeMap<String, Box<dyn NodeBehavior>>,
    started: bool,
}

impl Simulator {
    pub fn new(net: Network) -> Self {
        Simulator {
            core: Core {
                net,
                now: SimTime::ZERO,
                queue: BinaryHeap::new(),
                order: 0,
                log: EventLog::new(),
                disabled: BTreeSet::new(),
            },
            behaviors: BTreeMap::new(),
            started: false,
        }
    }

    pub fn add_behavior(&mut self, node: &str, behavior: Box<dyn NodeBehavior>) -> Result<(), SimError> {
        if self.core.net.node(node).is_none() {
            return Err(SimError::UnknownNode(node.to_owned()));
        }
        self.behaviors.insert(node.to_owned(), behavior);
        Ok(())
    }

    pub fn network(&self) -> &Network {
        &self.core.net
    }

    pub fn now(&self) -> SimTime {
        self.core.now
    }

    pub fn log(&self) -> &EventLog {
        &self.core.log
    }

    pub fn into_log(self) -> EventLog {
        self.core.log
    }

    pub fn port_enabled(&self, port: &PortRef) -> bool {
        self.core.port_enabled(port)
    }

    /// Appends an event outside of any node callback (scenario markers).
    pub fn record(&mut self, kind: EventKind, subject: Subject, detail: Option<EventDetail>) -> u64 {
        self.core.log(kind, subject, None, None, detail)
    }

    pub fn send(&mut self, from: &PortRef, raw: RawFrame, at: SimTime) -> Result<(), SimError> {
        self.core.net.check_port(from)?;
        self.core.check_future(at)?;
        if self.core.net.link_of(from).is_none() {
            return Err(SimError::UnlinkedPort(from.clone()));
        }
        self.core.push(at, Pending::Departure { from: from.clone(), frame: SimFrame::new(raw), cause: None });
        Ok(())
    }

    pub fn set_port_state(&mut self, port: &PortRef, enabled: bool, at: SimTime) -> Result<(), SimError> {
        self.core.net.check_port(port)?;
        self.core.check_future(at)?;
        self.core.push(at, Pending::PortState { port: port.clone(), enabled, cause: None });
        Ok(())
    }

    pub fn schedule_timer(&mut self, node: &str, at: SimTime, token: u64) -> Result<(), SimError> {
        if self.core.net.node(node).is_none() {
            return Err(SimError::UnknownNode(node.to_owned()));
        }
        self.core.check_future(at)?;
        self.core.push(at, Pending::Timer { node: node.to_owned(), token });
        Ok(())
    }

    pub fn send_control(&mut self, msg: ControllerMsg, at: SimTime) -> Result<(), SimError> {
        self.core.check_future(at)?;
        validate_control(&self.core.net, &msg)?;
        self.core.push(at, Pending::Control { msg });
        Ok(())
    }

    /// Enters a frame at `port`. On a linked port the frame departs over the
    /// link; on an unlinked port it appears as ingress traffic of that node.
    pub fn inject(&mut self, host: Host, port: &PortRef, raw: RawFrame, at: SimTime) -> Result<(), SimError> {
        self.core.net.check_port(port)?;
        self.core.check_future(at)?;
        self.core.push(at, Pending::Injection { host, port: port.clone(), frame: SimFrame::new(raw) });
        Ok(())
    }

    /// Processes every queued event with time <= `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> &EventLog {
        if !self.started {
            self.started = true;
            let names: Vec<String> = self.behaviors.keys().cloned().collect();
            for name in names {
                self.with_behavior(&name, |b, ctx| b.on_start(ctx));
            }
        }
        while self.core.queue.peek().is_some_and(|q| q.time <= t_end) {
            let Queued { time, item, .. } = self.core.queue.pop().expect("peeked");
            self.core.now = time;
            self.dispatch(item);
        }
        if self.core.now < t_end {
            self.core.now = t_end;
        }
        &self.core.log
    }

    fn with_behavior(&mut self, node: &str, f: impl FnOnce(&mut dyn NodeBehavior, &mut NodeCtx<'_>)) {
        if let Some(b) = self.behaviors.get_mut(node) {
            let mut ctx = NodeCtx { core: &mut self.core, node };
            f(b.as_mut(), &mut ctx);
        }
    }

    fn dispatch(&mut self, item: Pending) {
        match item {
            Pending::Departure { from, frame, cause } => self.core.depart(from, frame, cause),
            Pending::Arrival { at, frame, cause } => self.arrive(at, frame, cause),
            Pending::Timer { node, token } => self.with_behavior(&node, |b, ctx| b.on_timer(ctx, token)),
            Pending::PortState { port, enabled, cause } => self.core.set_port(port, enabled, cause),
            Pending::Control { msg } => self.deliver_control(msg),
            Pending::Injection { host, port, frame } => {
                let seq = self.core.log(
                    EventKind::Injected,
                    Subject::from(&port),
                    Some(&frame.raw),
                    None,
                    Some(EventDetail::Injected { host }),
                );
                if self.core.net.link_of(&port).is_some() {
                    self.core.depart(port, frame, Some(seq));
                } else if self.core.port_enabled(&port) {
                    self.arrive(port, frame, seq);
                } else {
                    self.core.log(
                        EventKind::FrameDrop,
                        Subject::from(&port),
                        Some(&frame.raw),
                        Some(seq),
                        Some(EventDetail::Drop { reason: DropReason::PortDisabled }),
                    );
                }
            }
        }
    }

    fn arrive(&mut self, at: PortRef, frame: SimFrame, cause: u64) {
        let seq = self.core.log(
            EventKind::FrameArrival,
            Subject::from(&at),
            Some(&frame.raw),
            Some(cause),
            Some(EventDetail::Frame { flagged: frame.flagged }),
        );
        let port = at.port;
        self.with_behavior(&at.node, |b, ctx| b.on_frame(ctx, port, &frame, seq));
    }

    fn deliver_control(&mut self, msg: ControllerMsg) {
        let (target, port) = match &msg {
            ControllerMsg::PortMod { switch, port, .. } => (switch.clone(), Some(*port)),
            ControllerMsg::FlowMod { switch, .. } => (switch.clone(), None),
            ControllerMsg::PacketIn { controller, .. } => (controller.clone(), None),
        };
        let seq = self.core.log(
            EventKind::ControlMsg,
            Subject { node: target.clone(), port },
            None,
            None,
            Some(EventDetail::Control(msg.clone())),
        );
        match msg {
            ControllerMsg::PortMod { switch, port, enable } => {
                self.core.set_port(PortRef::new(switch, port), enable, Some(seq));
            }
            other => self.with_behavior(&target, |b, ctx| b.on_control(ctx, &other, seq)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{build_topology, LinkSpec, NodeRole, NodeSpec, TopologySpec};

    fn pair(latency_us: u64) -> Network {
        build_topology(&TopologySpec {
            nodes: vec![
                NodeSpec { name: "a".into(), role: NodeRole::Pied, ports: 2 },
                NodeSpec { name: "b".into(), role: NodeRole::Omicron, ports: 2 },
            ],
            links: vec![LinkSpec { a: PortRef::new("a", 1), b: PortRef::new("b", 1), latency_us }],
        })
        .unwrap()
    }

    fn frame(tag: u8) -> RawFrame {
        RawFrame::new(vec![tag; 20])
    }

    #[test]
    fn empty_network_gives_empty_log() {
        let net = build_topology(&TopologySpec::default()).unwrap();
        let mut sim = Simulator::new(net);
        assert!(sim.run_until(SimTime::from_ms(100)).is_empty());
    }

    #[test]
    fn arrival_after_latency() {
        let mut sim = Simulator::new(pair(100));
        sim.send(&PortRef::new("a", 1), frame(1), SimTime::ZERO).unwrap();
        let log = sim.run_until(SimTime::from_ms(1));
        let arr: Vec<_> = log.of_kind(EventKind::FrameArrival).collect();
        assert_eq!(arr.len(), 1);
        assert_eq!(arr[0].time, SimTime(100));
        assert_eq!(arr[0].subject.port_ref(), Some(PortRef::new("b", 1)));
        assert_eq!(arr[0].cause, Some(0));
    }

    #[test]
    fn disabled_far_port_drops() {
        let mut sim = Simulator::new(pair(100));
        sim.set_port_state(&PortRef::new("b", 1), false, SimTime::ZERO).unwrap();
        sim.send(&PortRef::new("a", 1), frame(1), SimTime(10)).unwrap();
        let log = sim.run_until(SimTime::from_ms(1));
        assert_eq!(log.of_kind(EventKind::FrameArrival).count(), 0);
        assert_eq!(log.of_kind(EventKind::FrameDrop).count(), 1);
    }

    #[test]
    fn in_flight_frame_survives_disable() {
        let mut sim = Simulator::new(pair(100));
        sim.send(&PortRef::new("a", 1), frame(1), SimTime(49)).unwrap();
        sim.set_port_state(&PortRef::new("b", 1), false, SimTime(50)).unwrap();
        let log = sim.run_until(SimTime::from_ms(1));
        assert_eq!(log.of_kind(EventKind::FrameArrival).count(), 1);
        assert_eq!(log.of_kind(EventKind::FrameDrop).count(), 0);
    }

    #[test]
    fn same_time_sends_arrive_in_insertion_order() {
        let run = || {
            let mut sim = Simulator::new(pair(100));
            for tag in [3u8, 1, 2] {
                sim.send(&PortRef::new("a", 1), frame(tag), SimTime::ZERO).unwrap();
            }
            sim.run_until(SimTime::from_ms(1)).clone()
        };
        let log = run();
        let order: Vec<_> = log.of_kind(EventKind::FrameArrival).map(|e| e.digest.unwrap()).collect();
        let expected: Vec<_> = [3u8, 1, 2].iter().map(|&t| frame(t).digest()).collect();
        assert_eq!(order, expected);
        assert_eq!(run().to_jsonl(), log.to_jsonl());
    }

    #[test]
    fn enabling_enabled_port_logs_once() {
        let mut sim = Simulator::new(pair(1));
        sim.set_port_state(&PortRef::new("a", 2), true, SimTime(3)).unwrap();
        let log = sim.run_until(SimTime(10));
        assert_eq!(log.len(), 1);
        assert_eq!(log.events()[0].kind, EventKind::PortStateChange);
        assert!(sim.port_enabled(&PortRef::new("a", 2)));
    }

    #[test]
    fn errors_for_bad_ports() {
        let mut sim = Simulator::new(pair(1));
        assert!(matches!(sim.send(&PortRef::new("a", 2), frame(0), SimTime::ZERO), Err(SimError::UnlinkedPort(_))));
        assert!(matches!(
            sim.set_port_state(&PortRef::new("a", 7), false, SimTime::ZERO),
            Err(SimError::UnknownPort(_))
        ));
    }

    #[test]
    fn t_end_before_first_event() {
        let mut sim = Simulator::new(pair(1));
        sim.send(&PortRef::new("a", 1), frame(0), SimTime(500)).unwrap();
        assert!(sim.run_until(SimTime(499)).is_empty());
    }

    #[test]
    fn injection_on_unlinked_port_is_ingress() {
        let mut sim = Simulator::new(pair(1));
        sim.inject(Host::StationBusSwitch, &PortRef::new("a", 2), frame(9), SimTime(5)).unwrap();
        let log = sim.run_until(SimTime(10));
        let kinds: Vec<_> = log.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::Injected, EventKind::FrameArrival]);

        let mut sim = Simulator::new(pair(1));
        sim.set_port_state(&PortRef::new("a", 2), false, SimTime(0)).unwrap();
        sim.inject(Host::StationBusSwitch, &PortRef::new("a", 2), frame(9), SimTime(5)).unwrap();
        let log = sim.run_until(SimTime(10));
        assert_eq!(log.of_kind(EventKind::FrameArrival).count(), 0);
        assert_eq!(log.of_kind(EventKind::FrameDrop).count(), 1);
    }
}

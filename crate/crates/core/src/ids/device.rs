use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{decode_goose, FrameDigest, MacAddress, GOOSE_ETHERTYPE, SV_ETHERTYPE};
use crate::netsim::{EventDetail, EventKind, NodeBehavior, NodeCtx, SimFrame, SimTime};

use super::localize::{localize, mitigate, Host, IdsPorts, ObservationRecord, VerdictOutcome};
use super::rules::{inspect, Alert, RuleSet, SubscriptionState, MALFORMED_RULE_ID};

const DECIDE_TOKEN: u64 = 1;

/// Remembers copies sent out the loop port so the return can be recognized.
#[derive(Debug, Clone, Default)]
pub struct LoopTracker {
    window_us: u64,
    loop_in: u8,
    tags: BTreeMap<FrameDigest, Vec<SimTime>>,
}

impl LoopTracker {
    pub fn new(loop_in: u8, window_us: u64) -> Self {
        LoopTracker { window_us, loop_in, tags: BTreeMap::new() }
    }

    /// `at` is when the copy leaves the loop port.
    pub fn tag_loop(&mut self, digest: FrameDigest, at: SimTime) {
        self.tags.entry(digest).or_default().push(at);
    }

    /// True when a tagged copy of `digest` left strictly before `at` and no
    /// more than the window earlier. A match consumes its tag.
    pub fn is_loop(&mut self, digest: FrameDigest, ingress: u8, at: SimTime) -> bool {
        if ingress != self.loop_in {
            return false;
        }
        let window = self.window_us;
        let Some(times) = self.tags.get_mut(&digest) else { return false };
        times.retain(|t| *t + window >= at);
        let hit = times.iter().position(|t| *t < at);
        if let Some(i) = hit {
            times.remove(i);
        }
        if times.is_empty() {
            self.tags.remove(&digest);
        }
        hit.is_some()
    }
}

/// Maps a source MAC (and optionally specific control blocks) to a host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityBinding {
    pub host: Host,
    pub mac: MacAddress,
    #[serde(default)]
    pub gocb_refs: Vec<String>,
}

fn default_true() -> bool {
    true
}
fn default_window() -> u64 {
    10_000
}
fn default_passes() -> u32 {
    1
}
fn default_control_latency() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdsConfig {
    /// When false the IDS is a zero-delay passthrough with no inspection.
    #[serde(default = "default_true")]
    pub with_ids: bool,
    #[serde(default)]
    pub ports: IdsPorts,
    #[serde(default = "default_passes")]
    pub inspection_passes: u32,
    #[serde(default = "default_window")]
    pub loop_window_us: u64,
    #[serde(default = "default_window")]
    pub dedup_window_us: u64,
    #[serde(default = "default_window")]
    pub decision_window_us: u64,
    #[serde(default = "default_control_latency")]
    pub control_latency_us: u64,
    #[serde(default)]
    pub bindings: Vec<IdentityBinding>,
    pub rules: RuleSet,
}

impl IdsConfig {
    /// Inspection time per frame given the per-pass cost.
    pub fn effective_delay_us(&self, t_ids_us: u64) -> u64 {
        if self.with_ids {
            t_ids_us * u64::from(self.inspection_passes)
        } else {
            0
        }
    }

    fn origin(&self, src: Option<MacAddress>, gocb_ref: Option<&str>) -> Host {
        self.bindings
            .iter()
            .find(|b| {
                Some(b.mac) == src
                    && (b.gocb_refs.is_empty() || gocb_ref.is_some_and(|g| b.gocb_refs.iter().any(|r| r == g)))
            })
            .map_or(Host::StationBusSwitch, |b| b.host)
    }
}

pub struct IdsDevice {
    config: IdsConfig,
    delay_us: u64,
    state: SubscriptionState,
    loops: LoopTracker,
    forwarded: BTreeMap<FrameDigest, SimTime>,
    abnormal: BTreeMap<FrameDigest, Host>,
    observations: Vec<ObservationRecord>,
    armed: bool,
    decided: bool,
}

impl IdsDevice {
    pub fn new(config: IdsConfig, t_ids_us: u64) -> Self {
        let delay_us = config.effective_delay_us(t_ids_us);
        let loops = LoopTracker::new(config.ports.loop_in, config.loop_window_us);
        IdsDevice {
            config,
            delay_us,
            state: SubscriptionState::default(),
            loops,
            forwarded: BTreeMap::new(),
            abnormal: BTreeMap::new(),
            observations: Vec::new(),
            armed: false,
            decided: false,
        }
    }

    pub fn observations(&self) -> &[ObservationRecord] {
        &self.observations
    }

    /// At most one copy per digest reaches the Omicron within the window.
    fn claim_forward(&mut self, digest: FrameDigest, now: SimTime) -> bool {
        let window = self.config.dedup_window_us;
        self.forwarded.retain(|_, t| *t + window >= now);
        if self.forwarded.contains_key(&digest) {
            return false;
        }
        self.forwarded.insert(digest, now);
        true
    }

    fn forward(&mut self, ctx: &mut NodeCtx<'_>, frame: SimFrame, at: SimTime, cause: u64) {
        let egress = self.config.ports.egress;
        if let Err(e) = ctx.send(egress, frame, at, Some(cause)) {
            log::warn!("{}: cannot forward to port {egress}: {e}", ctx.node());
        }
    }

    fn observe(&mut self, ctx: &mut NodeCtx<'_>, obs: ObservationRecord) {
        self.observations.push(obs);
        if !self.armed && !self.decided {
            self.armed = true;
            let at = ctx.now() + self.config.decision_window_us;
            if let Err(e) = ctx.schedule_timer(at, DECIDE_TOKEN) {
                log::warn!("{}: cannot arm decision timer: {e}", ctx.node());
            }
        }
    }

    fn inspect_goose(
        &mut self,
        ctx: &mut NodeCtx<'_>,
        ingress: u8,
        frame: &SimFrame,
        digest: FrameDigest,
    ) -> Vec<Alert> {
        match decode_goose(frame.raw.as_bytes()) {
            Ok(goose) => inspect(&mut self.state, &self.config.rules, &goose, ingress, digest, ctx.now()),
            Err(e) => {
                log::debug!("{}: undecodable frame on port {ingress}: {e}", ctx.node());
                vec![Alert {
                    time: ctx.now(),
                    rule_id: MALFORMED_RULE_ID.to_owned(),
                    gocb_ref: String::new(),
                    ingress,
                    digest,
                }]
            }
        }
    }
}

impl NodeBehavior for IdsDevice {
    fn on_frame(&mut self, ctx: &mut NodeCtx<'_>, ingress: u8, frame: &SimFrame, arrival: u64) {
        let ports = self.config.ports;
        let now = ctx.now();
        let digest = frame.raw.digest();
        let ethertype = frame.raw.ethertype();
        if ethertype == Some(SV_ETHERTYPE) || ingress == ports.egress {
            return;
        }

        if !self.config.with_ids {
            if ethertype == Some(GOOSE_ETHERTYPE) && self.claim_forward(digest, now) {
                self.forward(ctx, frame.clone(), now, arrival);
            }
            return;
        }

        if self.loops.is_loop(digest, ingress, now) {
            if let Some(origin) = self.abnormal.get(&digest).copied() {
                let obs = ObservationRecord {
                    time: now,
                    origin_hypothesis: origin,
                    ingress_ids_port: ingress,
                    digest,
                    loop_copy: true,
                };
                self.observe(ctx, obs);
            }
            return;
        }

        let alerts = self.inspect_goose(ctx, ingress, frame, digest);
        let abnormal = !alerts.is_empty();
        for alert in alerts {
            ctx.record(
                EventKind::AlertRaised,
                Some(ingress),
                Some(&frame.raw),
                Some(arrival),
                Some(EventDetail::Alert(alert)),
            );
        }
        if abnormal {
            let origin = if ingress == ports.loop_in {
                Host::StationBusSwitch
            } else {
                let gocb = decode_goose(frame.raw.as_bytes()).ok().map(|g| g.gocb_ref);
                self.config.origin(frame.raw.src_mac(), gocb.as_deref())
            };
            self.abnormal.entry(digest).or_insert(origin);
            let obs = ObservationRecord {
                time: now,
                origin_hypothesis: origin,
                ingress_ids_port: ingress,
                digest,
                loop_copy: false,
            };
            self.observe(ctx, obs);
        }

        let depart = now + self.delay_us;
        let out = SimFrame { raw: frame.raw.clone(), flagged: frame.flagged || abnormal };
        if self.claim_forward(digest, now) {
            self.forward(ctx, out.clone(), depart, arrival);
        }
        if ingress == ports.bus_in {
            match ctx.send(ports.loop_out, out, depart, Some(arrival)) {
                Ok(()) => self.loops.tag_loop(digest, depart),
                Err(e) => log::warn!("{}: loop copy not sent: {e}", ctx.node()),
            }
        }
    }

    fn on_timer(&mut self, ctx: &mut NodeCtx<'_>, token: u64) {
        if token != DECIDE_TOKEN || self.decided {
            return;
        }
        self.armed = false;
        let outcome = match localize(&self.observations, &self.config.ports, ctx.now()) {
            Ok(o) => o,
            Err(e) => {
                log::warn!("{}: {e}", ctx.node());
                return;
            }
        };
        let seq = ctx.record(EventKind::VerdictReached, None, None, None, Some(EventDetail::Verdict(outcome.clone())));
        let VerdictOutcome::Verdict(verdict) = outcome else { return };
        log::info!("{}: culprit {:?} at {}", ctx.node(), verdict.culprit, ctx.now());
        self.decided = true;
        let at = ctx.now() + self.config.control_latency_us;
        for msg in mitigate(&verdict, ctx.network()) {
            if let Err(e) = ctx.send_control(msg, at) {
                log::warn!("{}: port-mod not sent (verdict {seq}): {e}", ctx.node());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_window_is_half_open() {
        let mut t = LoopTracker::new(7, 10);
        t.tag_loop(FrameDigest(1), SimTime(100));
        assert!(!t.is_loop(FrameDigest(1), 3, SimTime(105)));
        assert!(!t.is_loop(FrameDigest(1), 7, SimTime(100)));
        assert!(t.is_loop(FrameDigest(1), 7, SimTime(110)));
        // consumed
        assert!(!t.is_loop(FrameDigest(1), 7, SimTime(110)));
        t.tag_loop(FrameDigest(2), SimTime(100));
        assert!(!t.is_loop(FrameDigest(2), 7, SimTime(111)));
    }

    #[test]
    fn identity_binding_falls_back_to_switch() {
        let mac = MacAddress([0, 0x30, 0xa7, 0, 0, 2]);
        let cfg = IdsConfig {
            with_ids: true,
            ports: IdsPorts::default(),
            inspection_passes: 1,
            loop_window_us: 10_000,
            dedup_window_us: 10_000,
            decision_window_us: 10_000,
            control_latency_us: 500,
            bindings: vec![IdentityBinding { host: Host::Pied, mac, gocb_refs: vec!["G".into()] }],
            rules: RuleSet::default(),
        };
        assert_eq!(cfg.origin(Some(mac), Some("G")), Host::Pied);
        assert_eq!(cfg.origin(Some(mac), Some("H")), Host::StationBusSwitch);
        assert_eq!(cfg.origin(None, None), Host::StationBusSwitch);
        assert_eq!(cfg.effective_delay_us(4_000), 4_000);
    }
}

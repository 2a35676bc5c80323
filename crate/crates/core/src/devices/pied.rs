use serde::{Deserialize, Serialize};

use crate::codec::{decode_sv, encode_goose, GooseFrame, MacAddress, SvFrame, SV_ETHERTYPE};
use crate::netsim::{NodeBehavior, NodeCtx, SimFrame, SimTime};

use super::mu::DeviceConfigError;

const HEARTBEAT: u64 = 0;
const TRIP: u64 = 1;

fn default_pickup() -> u32 {
    5_000
}
fn default_interval() -> u64 {
    50_000
}
fn default_ttl() -> u32 {
    100
}
fn default_ports() -> Vec<u8> {
    vec![1, 2]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiedConfig {
    #[serde(default = "default_pickup")]
    pub pickup_current_ma: u32,
    /// Heartbeat retransmission interval.
    #[serde(default = "default_interval")]
    pub publish_interval_us: u64,
    pub gocb_ref: String,
    pub dataset_ref: String,
    pub mac: MacAddress,
    pub dst: MacAddress,
    pub app_id: u16,
    #[serde(default = "default_ttl")]
    pub ttl_ms: u32,
    /// Ports the GOOSE publication leaves on.
    #[serde(default = "default_ports")]
    pub goose_ports: Vec<u8>,
    pub samples_per_second: u32,
}

impl PiedConfig {
    pub fn validate(&self) -> Result<(), DeviceConfigError> {
        if self.pickup_current_ma == 0 {
            return Err(DeviceConfigError::BadPickup);
        }
        if self.publish_interval_us == 0 {
            return Err(DeviceConfigError::BadInterval);
        }
        Ok(())
    }

    /// Publication before any state change: st 1, sq 0, not tripped.
    pub fn initial_frame(&self) -> GooseFrame {
        GooseFrame {
            dst: self.dst,
            src: self.mac,
            app_id: self.app_id,
            gocb_ref: self.gocb_ref.clone(),
            time_allowed_to_live: self.ttl_ms,
            st_num: 1,
            sq_num: 0,
            test: false,
            timestamp: 0,
            dataset_ref: self.dataset_ref.clone(),
            all_data: vec![false],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiedState {
    pub last: GooseFrame,
    pub latched: bool,
}

impl PiedState {
    pub fn new(config: &PiedConfig) -> Self {
        PiedState { last: config.initial_frame(), latched: false }
    }
}

/// Overcurrent check for one SV sample. Returns when the trip publication
/// should leave; the caller commits it through [`publish_trip`] at that time.
pub fn pied_on_sv(
    frame: &SvFrame,
    state: &PiedState,
    config: &PiedConfig,
    at: SimTime,
    t_pied_us: u64,
) -> Option<SimTime> {
    if state.latched || frame.max_current_magnitude() < config.pickup_current_ma {
        return None;
    }
    Some(at + t_pied_us)
}

/// State change: st_num + 1, sq_num 0, trip point set, latch engaged.
pub fn publish_trip(state: &mut PiedState, at: SimTime) -> GooseFrame {
    let mut next = crate::codec::next_publication(&state.last, true, at.as_us());
    next.all_data[0] = true;
    state.last = next.clone();
    state.latched = true;
    next
}

pub fn publish_heartbeat(state: &mut PiedState, at: SimTime) -> GooseFrame {
    let next = crate::codec::next_publication(&state.last, false, at.as_us());
    state.last = next.clone();
    next
}

pub struct Pied {
    config: PiedConfig,
    state: PiedState,
    t_pied_us: u64,
    pending_trip: Option<u64>,
    started: bool,
}

impl Pied {
    pub fn new(config: PiedConfig, t_pied_us: u64) -> Result<Self, DeviceConfigError> {
        config.validate()?;
        let state = PiedState::new(&config);
        Ok(Pied { config, state, t_pied_us, pending_trip: None, started: false })
    }

    fn send(&self, ctx: &mut NodeCtx<'_>, frame: &GooseFrame, cause: Option<u64>) {
        let raw = match encode_goose(frame) {
            Ok(raw) => raw,
            Err(e) => {
                log::error!("{}: cannot encode publication: {e}", ctx.node());
                return;
            }
        };
        let now = ctx.now();
        for &port in &self.config.goose_ports {
            if let Err(e) = ctx.send(port, SimFrame::new(raw.clone()), now, cause) {
                log::warn!("{}: {e}", ctx.node());
            }
        }
    }
}

impl NodeBehavior for Pied {
    fn on_start(&mut self, ctx: &mut NodeCtx<'_>) {
        let _ = ctx.schedule_timer(SimTime::ZERO, HEARTBEAT);
    }

    fn on_frame(&mut self, ctx: &mut NodeCtx<'_>, _ingress: u8, frame: &SimFrame, arrival: u64) {
        if frame.raw.ethertype() != Some(SV_ETHERTYPE) || self.pending_trip.is_some() {
            return;
        }
        let sv = match decode_sv(frame.raw.as_bytes(), self.config.samples_per_second) {
            Ok(sv) => sv,
            Err(e) => {
                log::debug!("{}: SV dropped: {e}", ctx.node());
                return;
            }
        };
        if let Some(at) = pied_on_sv(&sv, &self.state, &self.config, ctx.now(), self.t_pied_us) {
            self.pending_trip = Some(arrival);
            let _ = ctx.schedule_timer(at, TRIP);
        }
    }

    fn on_timer(&mut self, ctx: &mut NodeCtx<'_>, token: u64) {
        let now = ctx.now();
        match token {
            HEARTBEAT => {
                let frame = if self.started {
                    publish_heartbeat(&mut self.state, now)
                } else {
                    self.started = true;
                    self.state.last.timestamp = now.as_us();
                    self.state.last.clone()
                };
                self.send(ctx, &frame, None);
                let _ = ctx.schedule_timer(now + self.config.publish_interval_us, HEARTBEAT);
            }
            TRIP => {
                let cause = self.pending_trip.take();
                if !self.state.latched {
                    let frame = publish_trip(&mut self.state, now);
                    log::info!("{}: trip published at {now} (st {})", ctx.node(), frame.st_num);
                    self.send(ctx, &frame, cause);
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PiedConfig {
        PiedConfig {
            pickup_current_ma: 5_000,
            publish_interval_us: 50_000,
            gocb_ref: "PIED/LLN0$GO$gcb1".into(),
            dataset_ref: "PIED/LLN0$DS1".into(),
            mac: MacAddress([0, 0x30, 0xa7, 0, 0, 2]),
            dst: MacAddress([0x01, 0x0c, 0xcd, 0x01, 0, 1]),
            app_id: 1,
            ttl_ms: 100,
            goose_ports: vec![1, 2],
            samples_per_second: 1_000,
        }
    }

    fn sv(peak: i32) -> SvFrame {
        SvFrame {
            dst: MacAddress([0x01, 0x0c, 0xcd, 0x04, 0, 1]),
            src: MacAddress([0, 0x30, 0xa7, 0, 0, 1]),
            sv_id: "MU01".into(),
            smp_cnt: 0,
            currents: [peak, -peak / 2, -peak / 2],
            voltages: [0; 3],
        }
    }

    #[test]
    fn below_pickup_is_quiet() {
        let c = cfg();
        assert_eq!(pied_on_sv(&sv(4_999), &PiedState::new(&c), &c, SimTime(0), 10_000), None);
    }

    #[test]
    fn trip_after_processing_delay_then_latched() {
        let c = cfg();
        let mut st = PiedState::new(&c);
        let at = pied_on_sv(&sv(-20_000), &st, &c, SimTime(200_000), 10_000).unwrap();
        assert_eq!(at, SimTime(210_000));
        let f = publish_trip(&mut st, at);
        assert_eq!((f.st_num, f.sq_num, f.trip()), (2, 0, true));
        assert_eq!(pied_on_sv(&sv(-20_000), &st, &c, SimTime(201_000), 10_000), None);
        let hb = publish_heartbeat(&mut st, SimTime(250_000));
        assert_eq!((hb.st_num, hb.sq_num, hb.trip()), (2, 1, true));
    }
}

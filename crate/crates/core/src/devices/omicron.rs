use serde::{Deserialize, Serialize};

use crate::codec::{decode_goose, GooseFrame, GOOSE_ETHERTYPE};
use crate::netsim::{EventKind, NodeBehavior, NodeCtx, SimFrame, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakerPosition {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakerState {
    pub position: BreakerPosition,
    pub last_trip_time: Option<SimTime>,
}

impl Default for BreakerState {
    fn default() -> Self {
        BreakerState { position: BreakerPosition::Closed, last_trip_time: None }
    }
}

/// Whether the Omicron acts on trip commands the IDS has flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripPolicy {
    #[default]
    IgnoreFlagged,
    ActOnAll,
}

/// Applies a decoded GOOSE command. Only a trip on a closed breaker changes
/// anything.
pub fn omicron_on_goose(frame: &GooseFrame, state: BreakerState, at: SimTime) -> BreakerState {
    if frame.trip() && state.position == BreakerPosition::Closed {
        BreakerState { position: BreakerPosition::Open, last_trip_time: Some(at) }
    } else {
        state
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmicronConfig {
    #[serde(default)]
    pub trip_policy: TripPolicy,
}

pub struct Omicron {
    policy: TripPolicy,
    t_oc_us: u64,
    breaker: BreakerState,
    pending: Option<(GooseFrame, u64)>,
}

impl Omicron {
    pub fn new(config: &OmicronConfig, t_oc_us: u64) -> Self {
        Omicron { policy: config.trip_policy, t_oc_us, breaker: BreakerState::default(), pending: None }
    }

    pub fn breaker(&self) -> BreakerState {
        self.breaker
    }
}

impl NodeBehavior for Omicron {
    fn on_frame(&mut self, ctx: &mut NodeCtx<'_>, _ingress: u8, frame: &SimFrame, arrival: u64) {
        if frame.raw.ethertype() != Some(GOOSE_ETHERTYPE) || self.pending.is_some() {
            return;
        }
        if frame.flagged && self.policy == TripPolicy::IgnoreFlagged {
            log::debug!("{}: ignoring flagged frame at {}", ctx.node(), ctx.now());
            return;
        }
        let Ok(goose) = decode_goose(frame.raw.as_bytes()) else { return };
        if goose.trip() && self.breaker.position == BreakerPosition::Closed {
            self.pending = Some((goose, arrival));
            let _ = ctx.schedule_timer(ctx.now() + self.t_oc_us, 0);
        }
    }

    fn on_timer(&mut self, ctx: &mut NodeCtx<'_>, _token: u64) {
        let Some((goose, arrival)) = self.pending.take() else { return };
        let before = self.breaker;
        self.breaker = omicron_on_goose(&goose, before, ctx.now());
        if self.breaker != before {
            ctx.record(EventKind::BreakerTrip, None, None, Some(arrival), None);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::codec::{encode_sv, CodecError, MacAddress, SvFrame};
use crate::netsim::{EventKind, NodeBehavior, NodeCtx, SimFrame, SimTime};

use super::waveform::{Sample, Waveform};

fn default_sps() -> u32 {
    1_000
}
fn default_source() -> String {
    "omicron".to_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuConfig {
    #[serde(default = "default_sps")]
    pub samples_per_second: u32,
    /// Node whose analog outputs are being sampled.
    #[serde(default = "default_source")]
    pub source: String,
    pub sv_id: String,
    pub mac: MacAddress,
    pub dst: MacAddress,
    #[serde(default = "one")]
    pub port: u8,
}

fn one() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeviceConfigError {
    #[error("samples_per_second must be a positive divisor of 1000000, got {0}")]
    BadSampleRate(u32),
    #[error("pickup current must be positive")]
    BadPickup,
    #[error("publish interval must be positive")]
    BadInterval,
}

impl MuConfig {
    pub fn period_us(&self) -> Result<u64, DeviceConfigError> {
        let sps = u64::from(self.samples_per_second);
        if sps == 0 || 1_000_000 % sps != 0 || sps > u64::from(u16::MAX) + 1 {
            return Err(DeviceConfigError::BadSampleRate(self.samples_per_second));
        }
        Ok(1_000_000 / sps)
    }
}

/// One sample tick: the SV frame for sample number `tick` and when it leaves.
pub fn mu_step(config: &MuConfig, sample: Sample, tick: u64, at: SimTime, t_mu_us: u64) -> (SvFrame, SimTime) {
    let frame = SvFrame {
        dst: config.dst,
        src: config.mac,
        sv_id: config.sv_id.clone(),
        smp_cnt: (tick % u64::from(config.samples_per_second)) as u16,
        currents: sample.currents,
        voltages: sample.voltages,
    };
    (frame, at + t_mu_us)
}

pub struct MergingUnit {
    config: MuConfig,
    waveform: Waveform,
    period_us: u64,
    t_mu_us: u64,
}

impl MergingUnit {
    pub fn new(config: MuConfig, waveform: Waveform, t_mu_us: u64) -> Result<Self, DeviceConfigError> {
        let period_us = config.period_us()?;
        Ok(MergingUnit { config, waveform, period_us, t_mu_us })
    }

    fn emit(&self, ctx: &mut NodeCtx<'_>, tick: u64) -> Result<(), CodecError> {
        let now = ctx.now();
        let (sv, depart) = mu_step(&self.config, self.waveform.sample(now.as_us()), tick, now, self.t_mu_us);
        let raw = encode_sv(&sv, self.config.samples_per_second)?;
        let seq = ctx.record(EventKind::Sampled, None, Some(&raw), None, None);
        if let Err(e) = ctx.send(self.config.port, SimFrame::new(raw), depart, Some(seq)) {
            log::warn!("{}: {e}", ctx.node());
        }
        Ok(())
    }
}

impl NodeBehavior for MergingUnit {
    fn on_start(&mut self, ctx: &mut NodeCtx<'_>) {
        let _ = ctx.schedule_timer(SimTime::ZERO, 0);
    }

    fn on_frame(&mut self, _ctx: &mut NodeCtx<'_>, _ingress: u8, _frame: &SimFrame, _arrival: u64) {}

    fn on_timer(&mut self, ctx: &mut NodeCtx<'_>, tick: u64) {
        if let Err(e) = self.emit(ctx, tick) {
            log::error!("{}: sample {tick} not encodable: {e}", ctx.node());
        }
        let _ = ctx.schedule_timer(SimTime((tick + 1) * self.period_us), tick + 1);
    }
}

use serde::{Deserialize, Serialize};

use super::wire::{self, FrameWriter, TlvReader};
use super::{CodecError, MacAddress, RawFrame};

pub const SV_ETHERTYPE: u16 = 0x88BA;
/// SV frames carry no configurable app_id; this fixed value occupies the slot.
pub const SV_APP_ID: u16 = 0x4000;

const TAG_SV_ID: u8 = 0x80;
const TAG_SMP_CNT: u8 = 0x82;
const TAG_CURRENTS: u8 = 0x87;
const TAG_VOLTAGES: u8 = 0x88;

/// Simplified sampled-values frame: one three-phase sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvFrame {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub sv_id: String,
    pub smp_cnt: u16,
    /// Milliamperes, phases A, B, C.
    pub currents: [i32; 3],
    /// Volts, phases A, B, C.
    pub voltages: [i32; 3],
}

impl SvFrame {
    pub fn validate(&self, samples_per_second: u32) -> Result<(), CodecError> {
        if samples_per_second == 0 {
            return Err(CodecError::InvariantViolation("samples_per_second must be > 0".into()));
        }
        if u32::from(self.smp_cnt) >= samples_per_second {
            return Err(CodecError::InvariantViolation(format!(
                "smp_cnt {} outside wrap range 0..{samples_per_second}",
                self.smp_cnt
            )));
        }
        Ok(())
    }

    pub fn max_current_magnitude(&self) -> u32 {
        self.currents.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }
}

pub fn encode_sv(frame: &SvFrame, samples_per_second: u32) -> Result<RawFrame, CodecError> {
    frame.validate(samples_per_second)?;
    let mut w = FrameWriter::new(frame.dst, frame.src, SV_ETHERTYPE, SV_APP_ID);
    w.tlv(TAG_SV_ID, frame.sv_id.as_bytes())?;
    w.tlv(TAG_SMP_CNT, &frame.smp_cnt.to_be_bytes())?;
    w.tlv(TAG_CURRENTS, &phases_to_bytes(&frame.currents))?;
    w.tlv(TAG_VOLTAGES, &phases_to_bytes(&frame.voltages))?;
    Ok(RawFrame::new(w.finish()?))
}

pub fn decode_sv(raw: &[u8], samples_per_second: u32) -> Result<SvFrame, CodecError> {
    let (header, body) = wire::split_frame(raw, SV_ETHERTYPE)?;
    if header.app_id != SV_APP_ID {
        return Err(CodecError::MalformedField {
            field: "app_id",
            reason: format!("expected {SV_APP_ID:#06x}, found {:#06x}", header.app_id),
        });
    }
    let mut r = TlvReader::new(body);
    let sv_id = r.string(TAG_SV_ID, "sv_id")?;
    let smp_cnt = u16::from_be_bytes(r.fixed(TAG_SMP_CNT, "smp_cnt")?);
    let currents = phases_from_bytes(r.fixed(TAG_CURRENTS, "currents")?);
    let voltages = phases_from_bytes(r.fixed(TAG_VOLTAGES, "voltages")?);
    r.finish()?;
    let frame = SvFrame { dst: header.dst, src: header.src, sv_id, smp_cnt, currents, voltages };
    frame.validate(samples_per_second)?;
    Ok(frame)
}

fn phases_to_bytes(p: &[i32; 3]) -> [u8; 12] {
    let mut out = [0u8; 12];
    for (chunk, v) in out.chunks_exact_mut(4).zip(p) {
        chunk.copy_from_slice(&v.to_be_bytes());
    }
    out
}

fn phases_from_bytes(b: [u8; 12]) -> [i32; 3] {
    let mut out = [0i32; 3];
    for (v, chunk) in out.iter_mut().zip(b.chunks_exact(4)) {
        *v = i32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
    }
    out
}

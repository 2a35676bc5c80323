use serde::{Deserialize, Serialize};

use super::wire::{self, FrameWriter, TlvReader};
use super::{CodecError, MacAddress, RawFrame};

pub const GOOSE_ETHERTYPE: u16 = 0x88B8;

pub(crate) const TAG_GOCB_REF: u8 = 0x80;
pub(crate) const TAG_TTL: u8 = 0x81;
pub(crate) const TAG_ST_NUM: u8 = 0x82;
pub(crate) const TAG_SQ_NUM: u8 = 0x83;
pub(crate) const TAG_TEST: u8 = 0x84;
pub(crate) const TAG_TIMESTAMP: u8 = 0x85;
pub(crate) const TAG_DATASET_REF: u8 = 0x86;
pub(crate) const TAG_ALL_DATA: u8 = 0x87;

/// One GOOSE publication. `all_data[0]` is the breaker trip command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GooseFrame {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub app_id: u16,
    pub gocb_ref: String,
    /// Milliseconds.
    pub time_allowed_to_live: u32,
    pub st_num: u32,
    pub sq_num: u32,
    pub test: bool,
    /// Microseconds since epoch.
    pub timestamp: u64,
    pub dataset_ref: String,
    pub all_data: Vec<bool>,
}

impl GooseFrame {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.st_num == 0 {
            return Err(CodecError::InvariantViolation("st_num must be >= 1".into()));
        }
        if self.time_allowed_to_live == 0 {
            return Err(CodecError::InvariantViolation("time_allowed_to_live must be > 0".into()));
        }
        if self.all_data.is_empty() {
            return Err(CodecError::InvariantViolation("all_data must not be empty".into()));
        }
        if !self.dst.is_multicast() {
            return Err(CodecError::InvariantViolation(format!(
                "GOOSE destination {} is not a multicast address",
                self.dst
            )));
        }
        Ok(())
    }

    pub fn trip(&self) -> bool {
        self.all_data.first().copied().unwrap_or(false)
    }
}

pub fn encode_goose(frame: &GooseFrame) -> Result<RawFrame, CodecError> {
    frame.validate()?;
    let mut w = FrameWriter::new(frame.dst, frame.src, GOOSE_ETHERTYPE, frame.app_id);
    w.tlv(TAG_GOCB_REF, frame.gocb_ref.as_bytes())?;
    w.tlv(TAG_TTL, &frame.time_allowed_to_live.to_be_bytes())?;
    w.tlv(TAG_ST_NUM, &frame.st_num.to_be_bytes())?;
    w.tlv(TAG_SQ_NUM, &frame.sq_num.to_be_bytes())?;
    w.tlv(TAG_TEST, &[frame.test as u8])?;
    w.tlv(TAG_TIMESTAMP, &frame.timestamp.to_be_bytes())?;
    w.tlv(TAG_DATASET_REF, frame.dataset_ref.as_bytes())?;
    let points: Vec<u8> = frame.all_data.iter().map(|&b| b as u8).collect();
    w.tlv(TAG_ALL_DATA, &points)?;
    Ok(RawFrame::new(w.finish()?))
}

pub fn decode_goose(raw: &[u8]) -> Result<GooseFrame, CodecError> {
    let (header, body) = wire::split_frame(raw, GOOSE_ETHERTYPE)?;
    let mut r = TlvReader::new(body);
    let gocb_ref = r.string(TAG_GOCB_REF, "gocb_ref")?;
    let ttl = u32::from_be_bytes(r.fixed(TAG_TTL, "time_allowed_to_live")?);
    let st_num = u32::from_be_bytes(r.fixed(TAG_ST_NUM, "st_num")?);
    let sq_num = u32::from_be_bytes(r.fixed(TAG_SQ_NUM, "sq_num")?);
    let test = r.boolean(TAG_TEST, "test")?;
    let timestamp = u64::from_be_bytes(r.fixed(TAG_TIMESTAMP, "timestamp")?);
    let dataset_ref = r.string(TAG_DATASET_REF, "dataset_ref")?;
    let all_data = r
        .expect(TAG_ALL_DATA, "all_data")?
        .iter()
        .map(|&b| wire::decode_bool(b, "all_data"))
        .collect::<Result<Vec<_>, _>>()?;
    r.finish()?;

    let frame = GooseFrame {
        dst: header.dst,
        src: header.src,
        app_id: header.app_id,
        gocb_ref,
        time_allowed_to_live: ttl,
        st_num,
        sq_num,
        test,
        timestamp,
        dataset_ref,
        all_data,
    };
    frame.validate()?;
    Ok(frame)
}

/// Publisher sequencing: a state change bumps `st_num` and restarts `sq_num`,
/// a retransmission bumps `sq_num` only.
pub fn next_publication(prev: &GooseFrame, state_changed: bool, now: u64) -> GooseFrame {
    let mut next = prev.clone();
    if state_changed {
        // st_num wraps to 1, never 0
        next.st_num = prev.st_num.checked_add(1).unwrap_or(1);
        next.sq_num = 0;
    } else {
        next.sq_num = prev.sq_num.wrapping_add(1);
    }
    next.timestamp = now;
    next
}

//! Wire codec for the simulated GOOSE and SV frames.
//!
//! The body is a fixed-order TLV sequence rather than ASN.1 BER; see
//! `FORMAT.md` at the crate root for the byte layout and golden fixtures.

mod goose;
mod mac;
mod sv;
mod wire;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

pub use goose::{decode_goose, encode_goose, next_publication, GooseFrame, GOOSE_ETHERTYPE};
pub use mac::{MacAddress, ParseMacError};
pub use sv::{decode_sv, encode_sv, SvFrame, SV_APP_ID, SV_ETHERTYPE};

/// Minimum length of anything decode will look at (Ethernet header).
pub const MIN_FRAME_LEN: usize = wire::ETH_HEADER_LEN;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("wrong ethertype: expected {expected:#06x}, found {found:#06x}")]
    WrongEthertype { expected: u16, found: u16 },
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("malformed field `{field}`: {reason}")]
    MalformedField { field: &'static str, reason: String },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

/// Opaque frame bytes as carried by links and switches.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawFrame {
    bytes: Vec<u8>,
}

impl RawFrame {
    pub fn new(bytes: Vec<u8>) -> Self {
        RawFrame { bytes }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn ethertype(&self) -> Option<u16> {
        (self.bytes.len() >= 14).then(|| u16::from_be_bytes([self.bytes[12], self.bytes[13]]))
    }

    pub fn src_mac(&self) -> Option<MacAddress> {
        let mut o = [0u8; 6];
        o.copy_from_slice(self.bytes.get(6..12)?);
        Some(MacAddress(o))
    }

    /// The app_id slot, only meaningful for GOOSE/SV ethertypes.
    pub fn app_id(&self) -> Option<u16> {
        match self.ethertype()? {
            GOOSE_ETHERTYPE | SV_ETHERTYPE if self.bytes.len() >= 16 => {
                Some(u16::from_be_bytes([self.bytes[14], self.bytes[15]]))
            }
            _ => None,
        }
    }

    pub fn digest(&self) -> FrameDigest {
        FrameDigest::of(&self.bytes)
    }
}

impl From<Vec<u8>> for RawFrame {
    fn from(bytes: Vec<u8>) -> Self {
        RawFrame::new(bytes)
    }
}

/// First 64 bits of SHA-256 over the frame bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameDigest(pub u64);

impl FrameDigest {
    pub fn of(bytes: &[u8]) -> Self {
        let hash = Sha256::digest(bytes);
        let mut head = [0u8; 8];
        head.copy_from_slice(&hash[..8]);
        FrameDigest(u64::from_be_bytes(head))
    }
}

impl fmt::Display for FrameDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for FrameDigest {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FrameDigest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.len() != 16 {
            return Err(serde::de::Error::custom(format!("digest `{s}` is not 16 hex digits")));
        }
        u64::from_str_radix(&s, 16).map(FrameDigest).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_peeks_tolerate_short_frames() {
        let f = RawFrame::new(vec![0; 10]);
        assert_eq!(f.ethertype(), None);
        assert_eq!(f.src_mac(), None);
        assert_eq!(f.app_id(), None);
        let mut b = vec![0u8; 15];
        b[12] = 0x88;
        b[13] = 0xB8;
        let f = RawFrame::new(b);
        assert_eq!(f.ethertype(), Some(GOOSE_ETHERTYPE));
        assert_eq!(f.app_id(), None);
    }

    #[test]
    fn digest_roundtrips_through_json() {
        let d = FrameDigest::of(b"abc");
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<FrameDigest>(&s).unwrap(), d);
        assert!(serde_json::from_str::<FrameDigest>("\"12\"").is_err());
    }
}

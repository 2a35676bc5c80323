//! Shared framing helpers: Ethernet header plus a length-prefixed TLV body.
//!
//! Every TLV is `tag (1 byte) | length (2 bytes, big-endian) | value`.

use super::{CodecError, MacAddress};

pub(crate) const ETH_HEADER_LEN: usize = 14;
/// Ethernet header + app_id + body length.
pub(crate) const FRAME_PREFIX_LEN: usize = ETH_HEADER_LEN + 4;

pub(crate) struct FrameWriter {
    buf: Vec<u8>,
}

impl FrameWriter {
    pub fn new(dst: MacAddress, src: MacAddress, ethertype: u16, app_id: u16) -> Self {
        let mut buf = Vec::with_capacity(96);
        buf.extend_from_slice(&dst.0);
        buf.extend_from_slice(&src.0);
        buf.extend_from_slice(&ethertype.to_be_bytes());
        buf.extend_from_slice(&app_id.to_be_bytes());
        // body length, patched in finish()
        buf.extend_from_slice(&[0, 0]);
        FrameWriter { buf }
    }

    pub fn tlv(&mut self, tag: u8, value: &[u8]) -> Result<(), CodecError> {
        let len = u16::try_from(value.len())
            .map_err(|_| CodecError::InvariantViolation(format!("field with tag {tag:#04x} exceeds 65535 bytes")))?;
        self.buf.push(tag);
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(value);
        Ok(())
    }

    pub fn finish(mut self) -> Result<Vec<u8>, CodecError> {
        let body = self.buf.len() - FRAME_PREFIX_LEN;
        let body = u16::try_from(body)
            .map_err(|_| CodecError::InvariantViolation("encoded body exceeds 65535 bytes".into()))?;
        self.buf[16..18].copy_from_slice(&body.to_be_bytes());
        Ok(self.buf)
    }
}

pub(crate) struct Header {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub app_id: u16,
}

/// Validates the fixed prefix and returns the header plus the exact body slice.
pub(crate) fn split_frame(raw: &[u8], ethertype: u16) -> Result<(Header, &[u8]), CodecError> {
    if raw.len() < ETH_HEADER_LEN {
        return Err(CodecError::Truncated { needed: ETH_HEADER_LEN, available: raw.len() });
    }
    let found = u16::from_be_bytes([raw[12], raw[13]]);
    if found != ethertype {
        return Err(CodecError::WrongEthertype { expected: ethertype, found });
    }
    if raw.len() < FRAME_PREFIX_LEN {
        return Err(CodecError::Truncated { needed: FRAME_PREFIX_LEN, available: raw.len() });
    }
    let app_id = u16::from_be_bytes([raw[14], raw[15]]);
    let body_len = u16::from_be_bytes([raw[16], raw[17]]) as usize;
    let needed = FRAME_PREFIX_LEN + body_len;
    if raw.len() < needed {
        return Err(CodecError::Truncated { needed, available: raw.len() });
    }
    if raw.len() > needed {
        return Err(CodecError::MalformedField {
            field: "frame",
            reason: format!("{} trailing bytes after declared body", raw.len() - needed),
        });
    }
    let mut dst = [0u8; 6];
    let mut src = [0u8; 6];
    dst.copy_from_slice(&raw[0..6]);
    src.copy_from_slice(&raw[6..12]);
    Ok((Header { dst: MacAddress(dst), src: MacAddress(src), app_id }, &raw[FRAME_PREFIX_LEN..]))
}

pub(crate) struct TlvReader<'a> {
    body: &'a [u8],
    pos: usize,
}

impl<'a> TlvReader<'a> {
    pub fn new(body: &'a [u8]) -> Self {
        TlvReader { body, pos: 0 }
    }

    pub fn expect(&mut self, tag: u8, field: &'static str) -> Result<&'a [u8], CodecError> {
        let rest = &self.body[self.pos..];
        if rest.len() < 3 {
            return Err(CodecError::MalformedField { field, reason: "missing TLV header".into() });
        }
        if rest[0] != tag {
            return Err(CodecError::MalformedField {
                field,
                reason: format!("expected tag {tag:#04x}, found {:#04x}", rest[0]),
            });
        }
        let len = u16::from_be_bytes([rest[1], rest[2]]) as usize;
        if rest.len() < 3 + len {
            return Err(CodecError::MalformedField { field, reason: format!("length {len} overruns body") });
        }
        self.pos += 3 + len;
        Ok(&rest[3..3 + len])
    }

    pub fn fixed<const N: usize>(&mut self, tag: u8, field: &'static str) -> Result<[u8; N], CodecError> {
        let v = self.expect(tag, field)?;
        v.try_into()
            .map_err(|_| CodecError::MalformedField { field, reason: format!("expected {N} bytes, found {}", v.len()) })
    }

    pub fn string(&mut self, tag: u8, field: &'static str) -> Result<String, CodecError> {
        let v = self.expect(tag, field)?;
        String::from_utf8(v.to_vec()).map_err(|_| CodecError::MalformedField { field, reason: "invalid UTF-8".into() })
    }

    pub fn boolean(&mut self, tag: u8, field: &'static str) -> Result<bool, CodecError> {
        let [b] = self.fixed::<1>(tag, field)?;
        decode_bool(b, field)
    }

    pub fn finish(self) -> Result<(), CodecError> {
        if self.pos != self.body.len() {
            return Err(CodecError::MalformedField {
                field: "body",
                reason: format!("{} unread bytes after last field", self.body.len() - self.pos),
            });
        }
        Ok(())
    }
}

pub(crate) fn decode_bool(b: u8, field: &'static str) -> Result<bool, CodecError> {
    match b {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(CodecError::MalformedField { field, reason: format!("boolean byte {other:#04x}") }),
    }
}

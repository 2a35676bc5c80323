"""Independent byte-level encoder for the golden frames.

Written straight from FORMAT.md without touching the Rust code. Run once;
the outputs are checked in and must never be regenerated from the Rust
encoder.
"""
import hashlib
import struct
from pathlib import Path

HERE = Path(__file__).parent


def mac(s):
    return bytes(int(x, 16) for x in s.split(":"))


def tlv(tag, value):
    return bytes([tag]) + struct.pack(">H", len(value)) + value


def frame(dst, src, ethertype, app_id, tlvs):
    body = b"".join(tlvs)
    return mac(dst) + mac(src) + struct.pack(">HHH", ethertype, app_id, len(body)) + body


goose = frame(
    "01:0c:cd:01:00:01", "00:30:a7:00:00:02", 0x88B8, 0x0001,
    [
        tlv(0x80, b"PIED/LLN0$GO$gcb1"),
        tlv(0x81, struct.pack(">I", 100)),
        tlv(0x82, struct.pack(">I", 2)),
        tlv(0x83, struct.pack(">I", 0)),
        tlv(0x84, b"\x00"),
        tlv(0x85, struct.pack(">Q", 216_000)),
        tlv(0x86, b"PIED/LLN0$DS1"),
        tlv(0x87, b"\x01"),
    ],
)

sv = frame(
    "01:0c:cd:04:00:01", "00:30:a7:00:00:01", 0x88BA, 0x4000,
    [
        tlv(0x80, b"MU01"),
        tlv(0x82, struct.pack(">H", 200)),
        tlv(0x87, struct.pack(">iii", 20_000, -10_000, -10_000)),
        tlv(0x88, struct.pack(">iii", 89_815, -44_908, -44_907)),
    ],
)

for name, data in [("goose_trip", goose), ("sv_sample", sv)]:
    (HERE / f"{name}.hex").write_text(data.hex() + "\n")
    print(name, len(data), hashlib.sha256(data).hexdigest()[:16])

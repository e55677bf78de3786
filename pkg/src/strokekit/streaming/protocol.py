"""Binary wire format.

Every frame is a 18-byte little-endian header followed by the payload::

    magic    4s   b"SKF1"
    version  u8   1
    kind     u8   1 IMU, 2 AUDIO, 3 CONTROL, 4 HEARTBEAT
    ts_ns    u64  device timestamp
    length   u32  payload bytes

Payloads: IMU is N x (u64 ts + 6 x f32), AUDIO is u64 ts + int16 PCM,
CONTROL is a UTF-8 JSON object, HEARTBEAT is 1, 3 or 4 u64 timestamps
(request t1, reply t1 t2 t3, client report t1 t2 t3 t4).
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ProtocolError

MAGIC = b"SKF1"
VERSION = 1
HEADER = struct.Struct("<4sBBQI")
MAX_PAYLOAD = 16 * 1024 * 1024
AUDIO_BLOCK = 160  # samples, 10 ms at 16 kHz

IMU_RECORD = np.dtype([("t", "<u8"), ("v", "<f4", (6,))])


class StreamKind(enum.IntEnum):
    IMU = 1
    AUDIO = 2
    CONTROL = 3
    HEARTBEAT = 4


@dataclass(frozen=True)
class Frame:
    kind: StreamKind
    device_ts_ns: int
    payload: bytes = b""
    version: int = VERSION

    @property
    def payload_len(self) -> int:
        return len(self.payload)


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(frame.payload)} bytes exceeds {MAX_PAYLOAD}")
    if not 0 <= frame.device_ts_ns < 2**64:
        raise ProtocolError(f"timestamp {frame.device_ts_ns} does not fit in u64")
    head = HEADER.pack(MAGIC, frame.version, int(frame.kind), frame.device_ts_ns, len(frame.payload))
    return head + frame.payload


def decode_header(head: bytes) -> tuple[StreamKind, int, int, int]:
    """(kind, version, device_ts_ns, payload_len); validates magic, version and size."""
    if len(head) != HEADER.size:
        raise ProtocolError(f"truncated header ({len(head)} of {HEADER.size} bytes)")
    magic, version, kind, ts, length = HEADER.unpack(head)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ProtocolError(f"unsupported protocol version {version}")
    try:
        kind = StreamKind(kind)
    except ValueError:
        raise ProtocolError(f"unknown stream kind {kind}") from None
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"payload length {length} exceeds {MAX_PAYLOAD}")
    return kind, version, ts, length


def decode_frame(data: bytes) -> tuple[Frame, int]:
    """Decode one frame from the front of ``data``; returns (frame, bytes consumed)."""
    kind, version, ts, length = decode_header(bytes(data[: HEADER.size]))
    end = HEADER.size + length
    if len(data) < end:
        raise ProtocolError(f"truncated payload ({len(data) - HEADER.size} of {length} bytes)")
    return Frame(kind, ts, bytes(data[HEADER.size:end]), version), end


def _read_exact(stream, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            break
        buf.extend(chunk)
    return bytes(buf)


def read_frame(stream):
    """Read one frame from a binary file-like object; None on clean EOF."""
    head = _read_exact(stream, HEADER.size)
    if not head:
        return None
    kind, version, ts, length = decode_header(head)
    payload = _read_exact(stream, length)
    if len(payload) != length:
        raise ProtocolError(f"connection closed mid-frame ({len(payload)} of {length} payload bytes)")
    return Frame(kind, ts, payload, version)


# -- payload codecs ----------------------------------------------------------

def encode_imu(t_ns, values) -> bytes:
    t_ns = np.asarray(t_ns, dtype=np.uint64).reshape(-1)
    rec = np.empty(t_ns.size, dtype=IMU_RECORD)
    rec["t"] = t_ns
    rec["v"] = np.asarray(values, dtype=np.float32).reshape(-1, 6)
    return rec.tobytes()


def decode_imu(payload: bytes) -> tuple[np.ndarray, np.ndarray]:
    if len(payload) % IMU_RECORD.itemsize:
        raise ProtocolError(f"IMU payload of {len(payload)} bytes is not a multiple of {IMU_RECORD.itemsize}")
    rec = np.frombuffer(payload, dtype=IMU_RECORD)
    return rec["t"].astype(np.int64), rec["v"].copy()


def encode_audio(t0_ns: int, pcm) -> bytes:
    return struct.pack("<Q", t0_ns) + np.asarray(pcm, dtype="<i2").tobytes()


def decode_audio(payload: bytes) -> tuple[int, np.ndarray]:
    if len(payload) < 8 or (len(payload) - 8) % 2:
        raise ProtocolError(f"audio payload of {len(payload)} bytes is malformed")
    (t0,) = struct.unpack_from("<Q", payload)
    return t0, np.frombuffer(payload, dtype="<i2", offset=8).copy()


def encode_control(message: dict) -> bytes:
    return json.dumps(message, sort_keys=True).encode("utf-8")


def decode_control(payload: bytes) -> dict:
    try:
        msg = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"control payload is not JSON: {exc}") from None
    if not isinstance(msg, dict) or "cmd" not in msg:
        raise ProtocolError("control payload must be an object with a 'cmd' field")
    return msg


def encode_heartbeat(*stamps: int) -> bytes:
    if len(stamps) not in (1, 3, 4):
        raise ProtocolError(f"heartbeat carries 1, 3 or 4 timestamps, got {len(stamps)}")
    return struct.pack(f"<{len(stamps)}Q", *stamps)


def decode_heartbeat(payload: bytes) -> tuple[int, ...]:
    if len(payload) not in (8, 24, 32):
        raise ProtocolError(f"heartbeat payload of {len(payload)} bytes is malformed")
    return struct.unpack(f"<{len(payload) // 8}Q", payload)


def imu_frame(t_ns, values) -> Frame:
    t_ns = np.asarray(t_ns).reshape(-1)
    return Frame(StreamKind.IMU, int(t_ns[0]) if t_ns.size else 0, encode_imu(t_ns, values))


def audio_frame(t0_ns: int, pcm) -> Frame:
    return Frame(StreamKind.AUDIO, int(t0_ns), encode_audio(int(t0_ns), pcm))


def control_frame(ts_ns: int, message: dict) -> Frame:
    return Frame(StreamKind.CONTROL, int(ts_ns), encode_control(message))


def heartbeat_frame(ts_ns: int, *stamps: int) -> Frame:
    return Frame(StreamKind.HEARTBEAT, int(ts_ns), encode_heartbeat(*stamps))

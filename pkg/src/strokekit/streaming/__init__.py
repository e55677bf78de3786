"""Sensor stream ingest: wire format, clock sync, session store, server and replay client."""

from .client import ReplayError, ReplayResult, replay
from .clock import ClockOffset, ClockSyncError, ClockTracker, estimate_offset
from .protocol import (
    Frame,
    StreamKind,
    decode_frame,
    encode_frame,
    read_frame,
)
from .server import ServerHandle, parse_address, serve
from .store import SessionStore, SessionWriter, read_session, write_session

__all__ = [
    "ClockOffset",
    "ClockSyncError",
    "ClockTracker",
    "Frame",
    "ReplayError",
    "ReplayResult",
    "ServerHandle",
    "SessionStore",
    "SessionWriter",
    "StreamKind",
    "decode_frame",
    "encode_frame",
    "estimate_offset",
    "parse_address",
    "read_frame",
    "read_session",
    "replay",
    "serve",
    "write_session",
]

"""Replay a stored session to a server, standing in for the watch client."""

from __future__ import annotations

import logging
import socket
import threading
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import StrokeKitError
from ..types import NS_PER_S, SessionRecording
from .clock import HEARTBEAT_PERIOD_S
from .protocol import (
    AUDIO_BLOCK,
    StreamKind,
    audio_frame,
    control_frame,
    decode_control,
    decode_heartbeat,
    encode_frame,
    heartbeat_frame,
    imu_frame,
    read_frame,
)
from .server import parse_address
from .store import pcm16

logger = logging.getLogger(__name__)

IMU_BATCH = 5  # samples per IMU frame (50 ms at 100 Hz)
SYNC_EXCHANGES = 3
ACK_TIMEOUT_S = 10.0


class ReplayError(StrokeKitError):
    code = "replay"


@dataclass
class ReplayResult:
    session_id: str
    frames_sent: int
    frames_acked: int
    complete: bool
    wall_time_s: float

    @property
    def ok(self) -> bool:
        return self.complete and self.frames_acked == self.frames_sent


def _schedule(session: SessionRecording, audio_block: int):
    """(session time ns, frame) for every data frame, in send order."""
    events = []
    for i in range(0, session.imu_t_ns.size, IMU_BATCH):
        t = session.imu_t_ns[i : i + IMU_BATCH]
        events.append((int(t[0]), 0, imu_frame(t, session.imu[i : i + IMU_BATCH])))
    pcm = pcm16(session.audio)
    step = NS_PER_S / session.audio_rate_hz
    for i in range(0, pcm.size, audio_block):
        t0 = session.audio_t0_ns + int(round(i * step))
        events.append((t0, 1, audio_frame(t0, pcm[i : i + audio_block])))
    events.sort(key=lambda e: (e[0], e[1]))
    return [(t, f) for t, _, f in events]


class _Connection:
    def __init__(self, sock: socket.socket, clock):
        self.sock = sock
        self.rfile = sock.makefile("rb")
        self.clock = clock
        self._send_lock = threading.Lock()

    def send(self, frame):
        data = encode_frame(frame)
        with self._send_lock:
            self.sock.sendall(data)

    def heartbeat(self):
        self.send(heartbeat_frame(self.clock(), self.clock()))

    def on_heartbeat(self, payload: bytes, t4: int):
        t1, t2, t3 = decode_heartbeat(payload)
        self.send(heartbeat_frame(t4, t1, t2, t3, t4))


def replay(session: SessionRecording, target_address, speed: float = 1.0,
           session_id: Optional[str] = None, audio_block: int = AUDIO_BLOCK) -> ReplayResult:
    """Stream ``session`` to a server at ``speed`` x real time.

    Data frames keep the recording's own timestamps; the client's clock for
    heartbeats runs from the first sample at wall-clock rate so the server
    can measure its offset before ``START``.
    """
    if not speed > 0:
        raise ValueError(f"speed must be positive, got {speed}")
    address = parse_address(target_address) if isinstance(target_address, str) else tuple(target_address)
    addr_str = "%s:%d" % address
    sid = session_id or str(session.meta.get("session_id") or f"replay-{time.time_ns()}")
    events = _schedule(session, audio_block)
    start_ns = min([t for t, _ in events] or [0])
    mono0 = time.monotonic_ns()

    def device_clock() -> int:
        return start_ns + (time.monotonic_ns() - mono0)

    try:
        sock = socket.create_connection(address, timeout=ACK_TIMEOUT_S)
    except OSError as exc:
        raise ReplayError(f"cannot connect to {addr_str}: {exc}") from exc
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    conn = _Connection(sock, device_clock)
    started = threading.Event()
    stopped = threading.Event()
    reply: dict = {}

    def reader():
        try:
            while True:
                frame = read_frame(conn.rfile)
                t4 = device_clock()
                if frame is None:
                    break
                if frame.kind is StreamKind.HEARTBEAT:
                    conn.on_heartbeat(frame.payload, t4)
                elif frame.kind is StreamKind.CONTROL:
                    msg = decode_control(frame.payload)
                    if msg.get("of") == "START":
                        reply["start"] = msg
                        started.set()
                    elif msg.get("of") == "STOP":
                        reply["stop"] = msg
                        stopped.set()
                        break
        except (OSError, StrokeKitError) as exc:
            logger.warning("replay reader stopped: %s", exc)
        finally:
            started.set()
            stopped.set()

    t_wall = time.monotonic()
    reader_thread = threading.Thread(target=reader, name="strokekit-replay-reader", daemon=True)
    reader_thread.start()
    sent = 0
    try:
        for _ in range(SYNC_EXCHANGES):
            conn.heartbeat()
            time.sleep(0.01)
        meta = {k: v for k, v in session.meta.items() if k in ("device_id", "user_id", "wall_clock_start")}
        meta["audio_rate_hz"] = session.audio_rate_hz
        conn.send(control_frame(device_clock(), {"cmd": "START", "session_id": sid, "meta": meta}))
        if not started.wait(ACK_TIMEOUT_S) or "start" not in reply:
            raise ReplayError(f"{addr_str} did not acknowledge START")
        t_begin = time.monotonic()
        next_hb = t_begin + HEARTBEAT_PERIOD_S
        for t_ns, frame in events:
            due = t_begin + (t_ns - start_ns) / NS_PER_S / speed
            now = time.monotonic()
            if due > now:
                time.sleep(due - now)
            if time.monotonic() >= next_hb:
                conn.heartbeat()
                next_hb += HEARTBEAT_PERIOD_S
            conn.send(frame)
            sent += 1
        conn.send(control_frame(device_clock(), {"cmd": "STOP"}))
        if not stopped.wait(ACK_TIMEOUT_S) or "stop" not in reply:
            raise ReplayError(f"{addr_str} did not acknowledge STOP")
    except OSError as exc:
        raise ReplayError(f"connection to {addr_str} failed after {sent} frames: {exc}") from exc
    finally:
        try:
            sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        sock.close()
        reader_thread.join(timeout=2)
    ack = reply["stop"]
    return ReplayResult(ack.get("session_id", reply["start"].get("session_id", sid)), sent,
                        int(ack.get("frames", 0)), bool(ack.get("complete", False)), time.monotonic() - t_wall)

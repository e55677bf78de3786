"""Threaded TCP ingest server.

Each connection runs its own handler. A client may send heartbeats at any
time; ``START`` opens a session in the store and locks the current smoothed
clock offset for it, so every persisted timestamp is ``device_ts + offset``
and stays strictly increasing. Later heartbeats keep refining the tracker
and are logged in the session metadata. ``STOP`` closes the session as
complete and is acknowledged with the number of data frames received.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
import time
from dataclasses import dataclass
from typing import Optional

from ..errors import ProtocolError
from .clock import ClockTracker
from .protocol import (
    Frame,
    StreamKind,
    control_frame,
    decode_audio,
    decode_control,
    decode_heartbeat,
    decode_imu,
    encode_frame,
    heartbeat_frame,
    read_frame,
)
from .store import SessionStore, SessionWriter

logger = logging.getLogger(__name__)


def parse_address(address: str, default_host: str = "127.0.0.1") -> tuple[str, int]:
    """``host:port`` or ``:port`` to a socket address tuple."""
    host, sep, port = str(address).rpartition(":")
    if not sep:
        host, port = "", address
    try:
        return (host or default_host), int(port)
    except ValueError:
        raise ValueError(f"invalid address {address!r}; expected host:port") from None


@dataclass
class _Session:
    writer: SessionWriter
    offset_ns: int
    synced: bool
    data_frames: int = 0
    failed: Optional[str] = None
    offset_log: list = None


class _Handler(socketserver.StreamRequestHandler):
    server: "_Server"

    def setup(self):
        super().setup()
        self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.clock = ClockTracker()
        self.session: Optional[_Session] = None
        self.peer = "%s:%d" % self.client_address[:2]

    def send(self, frame: Frame):
        self.wfile.write(encode_frame(frame))
        self.wfile.flush()

    def handle(self):
        ended = "disconnect"
        try:
            while True:
                frame = read_frame(self.rfile)
                received_ns = time.time_ns()
                if frame is None:
                    break
                if self.dispatch(frame, received_ns) == "bye":
                    ended = "stop"
                    continue
        except ProtocolError as exc:
            logger.error("protocol error from %s: %s; closing connection", self.peer, exc)
            ended = "protocol-error"
        except (ConnectionError, OSError) as exc:
            logger.warning("connection from %s lost: %s", self.peer, exc)
        finally:
            if self.session is not None:
                self.finish_session(complete=False, reason=ended)

    def dispatch(self, frame: Frame, received_ns: int):
        kind = frame.kind
        if kind is StreamKind.HEARTBEAT:
            stamps = decode_heartbeat(frame.payload)
            if len(stamps) == 1:
                self.send(heartbeat_frame(time.time_ns(), stamps[0], received_ns, time.time_ns()))
            elif len(stamps) == 4:
                sample = self.clock.update(*stamps)
                if sample is None:
                    logger.warning("%s: discarded non-monotonic heartbeat %s", self.peer, stamps)
                elif self.session is not None:
                    self.session.offset_log.append([sample.offset_ns, sample.rtt_ns])
            else:
                raise ProtocolError("clients do not send heartbeat replies")
            return None
        if kind is StreamKind.CONTROL:
            return self.control(decode_control(frame.payload))
        if self.session is None:
            raise ProtocolError(f"{kind.name} frame outside a session")
        self.session.data_frames += 1
        if self.session.failed:
            return None
        off = self.session.offset_ns
        try:
            if kind is StreamKind.IMU:
                t, values = decode_imu(frame.payload)
                self.session.writer.write_imu(t + off, values)
            else:
                t0, pcm = decode_audio(frame.payload)
                self.session.writer.write_audio(t0 + off, pcm)
        except OSError as exc:
            logger.error("session %s: write failed (%s); flagging incomplete", self.session.writer.session_id, exc)
            self.session.failed = f"write failed: {exc}"
        return None

    def control(self, msg: dict):
        cmd = msg["cmd"]
        if cmd == "START":
            if self.session is not None:
                raise ProtocolError("START while a session is open")
            offset = self.clock.offset_ns
            meta = dict(msg.get("meta") or {})
            meta.update({
                "clock_offset_ns": offset or 0,
                "clock_synced": offset is not None,
                "peer": self.peer,
            })
            writer = self.server.store.open(str(msg.get("session_id") or f"session-{time.time_ns()}"), meta)
            self.session = _Session(writer, offset or 0, offset is not None, offset_log=[])
            logger.info("%s: started session %s (offset %d ns)", self.peer, writer.session_id, offset or 0)
            self.send(control_frame(time.time_ns(), {"cmd": "ACK", "of": "START", "session_id": writer.session_id}))
            return None
        if cmd == "STOP":
            if self.session is None:
                raise ProtocolError("STOP without an open session")
            frames, sid = self.session.data_frames, self.session.writer.session_id
            complete = self.session.failed is None
            self.finish_session(complete=complete, reason="stop")
            self.send(control_frame(time.time_ns(), {"cmd": "ACK", "of": "STOP", "session_id": sid,
                                                     "frames": frames, "complete": complete}))
            return "bye"
        raise ProtocolError(f"unknown control command {cmd!r}")

    def finish_session(self, complete: bool, reason: str):
        s, self.session = self.session, None
        extra = {"ended_by": reason, "data_frames": s.data_frames, "clock_updates": s.offset_log}
        if s.failed:
            extra["failure"] = s.failed
        try:
            path = s.writer.close(complete=complete, extra_meta=extra)
            logger.info("session %s closed (%s, complete=%s)", s.writer.session_id, reason, complete)
            self.server.closed_sessions.append(path)
        except OSError as exc:
            logger.error("session %s: could not finalise: %s", s.writer.session_id, exc)


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, store: SessionStore):
        self.store = store
        self.closed_sessions: list = []
        super().__init__(address, _Handler)


class ServerHandle:
    """A running server; use as a context manager or call :meth:`stop`."""

    def __init__(self, server: _Server):
        self._server = server
        self._thread = threading.Thread(target=server.serve_forever, name="strokekit-serve", daemon=True)
        self._thread.start()

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    @property
    def address_str(self) -> str:
        return "%s:%d" % self.address

    @property
    def store(self) -> SessionStore:
        return self._server.store

    @property
    def closed_sessions(self) -> list:
        return list(self._server.closed_sessions)

    def wait(self):
        self._thread.join()

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def serve(listen_address, store: SessionStore) -> ServerHandle:
    """Bind and start serving in a background thread. Port 0 picks a free port."""
    address = parse_address(listen_address) if isinstance(listen_address, str) else tuple(listen_address)
    server = _Server(address, store)
    handle = ServerHandle(server)
    logger.info("listening on %s, store %s", handle.address_str, store.root)
    return handle

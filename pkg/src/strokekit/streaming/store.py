"""On-disk session layout::

    <root>/<session_id>/meta.json     metadata, file hashes, completion flag
    <root>/<session_id>/imu.jsonl     {"t_ns", "ax", "ay", "az", "gx", "gy", "gz"} per line
    <root>/<session_id>/audio.wav     16 kHz mono 16-bit PCM
    <root>/<session_id>/results.json  analysis output (optional)
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
import wave
from pathlib import Path
from typing import Optional

import numpy as np

from ..types import AUDIO_RATE_HZ, IMU_CHANNELS, SessionRecording

logger = logging.getLogger(__name__)

STORE_ENV = "STROKEKIT_STORE"
META, IMU, AUDIO, RESULTS = "meta.json", "imu.jsonl", "audio.wav", "results.json"
_SAFE_ID = re.compile(r"^[A-Za-z0-9._-]{1,128}$")


class SessionClosedError(RuntimeError):
    pass


def default_store_root() -> Path:
    return Path(os.environ.get(STORE_ENV, "sessions"))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def pcm16(audio: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(audio) * 32767.0), -32768, 32767).astype("<i2")


def imu_line(t_ns: int, row) -> str:
    rec = {"t_ns": int(t_ns)}
    rec.update({ch: float(v) for ch, v in zip(IMU_CHANNELS, row)})
    return json.dumps(rec)


class SessionWriter:
    """Append-only writer for one session directory.

    Writes are serialised by an internal lock. After :meth:`close` the files
    are hashed into ``meta.json`` and further writes raise.
    """

    def __init__(self, directory, session_id: str, meta: Optional[dict] = None,
                 audio_rate_hz: float = AUDIO_RATE_HZ):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=False)
        self.session_id = session_id
        self.meta = {"session_id": session_id, "device_id": "", "wall_clock_start": time.time()}
        self.meta.update(meta or {})
        self.meta["session_id"] = session_id
        self.audio_rate_hz = audio_rate_hz
        self._lock = threading.Lock()
        self._imu = open(self.dir / IMU, "w")
        self._wav = wave.open(str(self.dir / AUDIO), "wb")
        self._wav.setnchannels(1)
        self._wav.setsampwidth(2)
        self._wav.setframerate(int(audio_rate_hz))
        self._imu_count = 0
        self._audio_count = 0
        self._last_imu_t: Optional[int] = None
        self._audio_t0: Optional[int] = None
        self.closed = False

    def write_imu(self, t_ns, rows):
        with self._lock:
            if self.closed:
                raise SessionClosedError(f"session {self.session_id} is closed")
            lines = []
            for t, row in zip(np.asarray(t_ns).reshape(-1), np.asarray(rows).reshape(-1, 6)):
                t = int(t)
                if self._last_imu_t is not None and t <= self._last_imu_t:
                    logger.warning("session %s: dropping non-increasing imu timestamp %d", self.session_id, t)
                    continue
                self._last_imu_t = t
                lines.append(imu_line(t, row))
            if lines:
                self._imu.write("\n".join(lines) + "\n")
            self._imu_count += len(lines)

    def write_audio(self, t0_ns: int, pcm: np.ndarray):
        """Append 16-bit PCM samples; the first block fixes the audio start time."""
        with self._lock:
            if self.closed:
                raise SessionClosedError(f"session {self.session_id} is closed")
            if self._audio_t0 is None:
                self._audio_t0 = int(t0_ns)
            self._wav.writeframes(np.asarray(pcm, dtype="<i2").tobytes())
            self._audio_count += int(np.asarray(pcm).size)

    def close(self, complete: bool = True, extra_meta: Optional[dict] = None) -> Path:
        with self._lock:
            if self.closed:
                return self.dir
            self._imu.close()
            self._wav.close()
            self.closed = True
            self.meta.update(extra_meta or {})
            self.meta.update({
                "audio_t0_ns": self._audio_t0 if self._audio_t0 is not None else 0,
                "audio_rate_hz": self.audio_rate_hz,
                "imu_count": self._imu_count,
                "audio_samples": self._audio_count,
                "complete": bool(complete),
                "files": {IMU: sha256_file(self.dir / IMU), AUDIO: sha256_file(self.dir / AUDIO)},
            })
            (self.dir / META).write_text(json.dumps(self.meta, indent=2))
            return self.dir


class SessionStore:
    """A directory of sessions; safe to share between connection handlers."""

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else default_store_root()
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path(self, session_id: str) -> Path:
        return self.root / session_id

    def open(self, session_id: str, meta: Optional[dict] = None) -> SessionWriter:
        if not _SAFE_ID.match(session_id):
            raise ValueError(f"invalid session id {session_id!r}")
        with self._lock:
            d = self.path(session_id)
            if d.exists():
                # never reopen a stored session; keep the new one alongside
                k = 1
                while (self.root / f"{session_id}.{k}").exists():
                    k += 1
                d = self.root / f"{session_id}.{k}"
                session_id = d.name
            return SessionWriter(d, session_id, meta)

    def sessions(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if (p / META).exists())

    def load(self, session_id: str) -> SessionRecording:
        return read_session(self.path(session_id))


def write_session(session: SessionRecording, directory, complete: bool = True) -> Path:
    """Persist a whole recording in the store layout."""
    d = Path(directory)
    meta = {k: v for k, v in session.meta.items() if k not in ("complete", "files")}
    writer = SessionWriter(d, str(session.meta.get("session_id", d.name)), meta, session.audio_rate_hz)
    writer.write_imu(session.imu_t_ns, session.imu)
    writer.write_audio(session.audio_t0_ns, pcm16(session.audio))
    if session.audio.size == 0:
        writer._audio_t0 = session.audio_t0_ns
    return writer.close(complete)


def read_session(directory, verify: bool = True) -> SessionRecording:
    d = Path(directory)
    meta = json.loads((d / META).read_text())
    if verify:
        for name, digest in meta.get("files", {}).items():
            actual = sha256_file(d / name)
            if actual != digest:
                raise ValueError(f"{d / name}: content hash {actual[:12]} does not match meta.json {digest[:12]}")
    t, rows = [], []
    with open(d / IMU) as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            t.append(rec["t_ns"])
            rows.append([rec[ch] for ch in IMU_CHANNELS])
    with wave.open(str(d / AUDIO), "rb") as w:
        rate = w.getframerate()
        pcm = np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")
    return SessionRecording(
        imu_t_ns=np.asarray(t, dtype=np.int64),
        imu=np.asarray(rows, dtype=np.float64).reshape(-1, 6),
        audio=pcm.astype(np.float64) / 32767.0,
        audio_t0_ns=int(meta.get("audio_t0_ns", 0)),
        audio_rate_hz=float(rate),
        meta=meta,
    )

"""Client-to-server clock offset from NTP-style heartbeat exchanges.

The client stamps t1 when it sends, the server stamps t2 on receipt and t3
on reply, the client stamps t4 when the reply arrives. With a symmetric
path the offset of the server clock relative to the client clock is
``((t2 - t1) + (t3 - t4)) / 2``; any asymmetry shows up as an error of at
most half the round trip.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from ..errors import StrokeKitError

EMA_ALPHA = 0.2
HEARTBEAT_PERIOD_S = 1.0


class ClockSyncError(StrokeKitError, ValueError):
    code = "clock-sync"


@dataclass(frozen=True)
class ClockOffset:
    offset_ns: int  # server clock minus client clock
    rtt_ns: int
    sampled_at: float  # server wall-clock seconds

    def __post_init__(self):
        if self.rtt_ns < 0:
            raise ValueError(f"rtt must be non-negative, got {self.rtt_ns}")

    def to_server(self, device_ts_ns: int) -> int:
        return int(device_ts_ns) + self.offset_ns


def estimate_offset(t1: int, t2: int, t3: int, t4: int, sampled_at: Optional[float] = None) -> ClockOffset:
    """Offset and round trip for one exchange.

    Raises ClockSyncError unless t1 <= t4, t2 <= t3 and the server hold time
    fits inside the round trip.
    """
    t1, t2, t3, t4 = int(t1), int(t2), int(t3), int(t4)
    if t4 < t1 or t3 < t2:
        raise ClockSyncError(f"non-monotonic heartbeat timestamps {(t1, t2, t3, t4)}")
    rtt = (t4 - t1) - (t3 - t2)
    if rtt < 0:
        raise ClockSyncError(f"server hold time exceeds the round trip in {(t1, t2, t3, t4)}")
    # floor halves the odd-nanosecond case
    offset = ((t2 - t1) + (t3 - t4)) // 2
    return ClockOffset(offset, rtt, time.time() if sampled_at is None else sampled_at)


class ClockTracker:
    """Exponentially smoothed offset for one client."""

    def __init__(self, alpha: float = EMA_ALPHA):
        if not 0 < alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        self.alpha = alpha
        self._smoothed: Optional[float] = None
        self.last: Optional[ClockOffset] = None
        self.count = 0
        self.discarded = 0

    @property
    def offset_ns(self) -> Optional[int]:
        return None if self._smoothed is None else int(round(self._smoothed))

    def update(self, t1: int, t2: int, t3: int, t4: int) -> Optional[ClockOffset]:
        """Fold one exchange in; a rejected exchange is counted and returns None."""
        try:
            sample = estimate_offset(t1, t2, t3, t4)
        except ClockSyncError:
            self.discarded += 1
            return None
        return self.add(sample)

    def add(self, sample: ClockOffset) -> ClockOffset:
        if self._smoothed is None:
            self._smoothed = float(sample.offset_ns)
        else:
            self._smoothed += self.alpha * (sample.offset_ns - self._smoothed)
        self.last = sample
        self.count += 1
        return sample

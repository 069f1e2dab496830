"""Time-tagged event streams.

Timestamps are unsigned 64-bit integer ticks; the tick size (resolution) is
an integer number of picoseconds, 1 ps by default.  All user-facing times
are nanoseconds; conversion happens at the stream boundary only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_RESOLUTION_PS = 1


@dataclass
class EventStream:
    """Per-channel, time-sorted detection timestamps in integer ticks."""

    resolution: int                 # ps per tick
    channel: int
    timestamps: np.ndarray          # uint64 ticks, nondecreasing
    duration: int                   # ticks

    def __post_init__(self):
        if self.resolution <= 0:
            raise DomainError("resolution must be a positive integer (ps/tick)")
        ts = np.ascontiguousarray(self.timestamps, dtype=np.uint64)
        self.timestamps = ts
        self.duration = int(self.duration)
        if ts.size:
            d = np.diff(ts.astype(np.int64))
            if d.size and int(d.min()) < 0:
                raise DomainError("timestamps must be nondecreasing")
            if int(ts[-1]) > self.duration:
                raise DomainError("timestamps exceed stream duration")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @property
    def duration_ns(self) -> float:
        return self.duration * self.resolution / 1000.0

    @property
    def rate_per_ns(self) -> float:
        """Mean singles rate in counts/ns."""
        if self.duration == 0:
            return 0.0
        return len(self) / self.duration_ns

    def times_ns(self) -> np.ndarray:
        return self.timestamps.astype(np.float64) * (self.resolution / 1000.0)

    def ticks_i64(self) -> np.ndarray:
        return self.timestamps.astype(np.int64)


def ns_to_ticks(t_ns, resolution: int = DEFAULT_RESOLUTION_PS) -> np.ndarray:
    """Round nanosecond times to integer ticks."""
    t = np.asarray(t_ns, dtype=float) * (1000.0 / resolution)
    return np.round(t).astype(np.uint64)


def from_times_ns(times_ns, duration_ns: float, channel: int = 0,
                  resolution: int = DEFAULT_RESOLUTION_PS) -> EventStream:
    """Build a stream from sorted times in ns."""
    ts = ns_to_ticks(times_ns, resolution)
    dur = int(round(float(duration_ns) * 1000.0 / resolution))
    return EventStream(resolution=resolution, channel=channel, timestamps=ts, duration=dur)


def merge(streams, channel: int | None = None) -> EventStream:
    """Merge several streams (same resolution and duration) into one sorted stream."""
    streams = list(streams)
    if not streams:
        raise DomainError("nothing to merge")
    res = streams[0].resolution
    dur = streams[0].duration
    for s in streams[1:]:
        if s.resolution != res or s.duration != dur:
            raise DomainError("streams to merge must share resolution and duration")
    ts = np.sort(np.concatenate([s.timestamps for s in streams]))
    ch = streams[0].channel if channel is None else channel
    return EventStream(resolution=res, channel=ch, timestamps=ts, duration=dur)

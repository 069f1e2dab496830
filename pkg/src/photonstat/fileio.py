"""File formats: the PTS1 binary event container, CSV tables, report text.

PTS1 layout (little-endian):

    magic      4 bytes  b"PTS1"
    version    u32      1
    resolution u64      ps per tick
    channels   u8       number of channels in the file
    records    u64      total record count
    records... u8 channel + u64 timestamp ticks, channel-major,
               nondecreasing timestamps within each channel

The stream duration is not part of the container; readers either take it
from the caller (pipelines know it from the run config) or fall back to the
latest timestamp.  All writes are atomic (temp file + rename) and all float
formatting is fixed-precision, so identical inputs reproduce identical
bytes.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile

import numpy as np

from .errors import ParseError, Pts1FormatError
from .estimators import Correlogram, G3Map
from .events import EventStream

PTS1_MAGIC = b"PTS1"
PTS1_VERSION = 1
_HEADER = struct.Struct("<4sIQBQ")
_RECORD_DTYPE = np.dtype([("channel", "<u1"), ("timestamp", "<u8")])
FLOAT_FMT = "%.12g"


def atomic_write_bytes(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def config_hash(text: str) -> str:
    """Stable short hash identifying a run configuration."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def write_pts1(path: str, streams) -> None:
    """Write one or more event streams (shared resolution) to a PTS1 file."""
    streams = list(streams)
    if not streams:
        raise Pts1FormatError("nothing to write")
    res = streams[0].resolution
    for s in streams:
        if s.resolution != res:
            raise Pts1FormatError("streams in one file must share resolution")
    total = sum(len(s) for s in streams)
    rec = np.empty(total, dtype=_RECORD_DTYPE)
    at = 0
    for s in streams:
        n = len(s)
        rec["channel"][at:at + n] = s.channel
        rec["timestamp"][at:at + n] = s.timestamps
        at += n
    header = _HEADER.pack(PTS1_MAGIC, PTS1_VERSION, res, len(streams), total)
    atomic_write_bytes(path, header + rec.tobytes())


def read_pts1(path: str, duration_ticks: int | None = None) -> dict:
    """Read a PTS1 file into {channel: EventStream}.

    duration_ticks applies to every channel; when omitted the latest
    timestamp in the file is used.
    """
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise Pts1FormatError("file shorter than the header")
    magic, version, res, n_channels, n_records = _HEADER.unpack_from(raw)
    if magic != PTS1_MAGIC:
        raise Pts1FormatError(f"bad magic {magic!r}")
    if version != PTS1_VERSION:
        raise Pts1FormatError(f"unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != n_records * _RECORD_DTYPE.itemsize:
        raise Pts1FormatError("record count does not match file size")
    rec = np.frombuffer(body, dtype=_RECORD_DTYPE)
    channels = np.unique(rec["channel"])
    if len(channels) != n_channels:
        raise Pts1FormatError(f"header promises {n_channels} channels, found {len(channels)}")
    if duration_ticks is None:
        duration_ticks = int(rec["timestamp"].max()) if n_records else 0
    out = {}
    for ch in channels:
        ts = rec["timestamp"][rec["channel"] == ch]
        if ts.size > 1 and np.any(np.diff(ts.astype(np.int64)) < 0):
            raise Pts1FormatError(f"channel {ch} timestamps not nondecreasing")
        out[int(ch)] = EventStream(resolution=int(res), channel=int(ch),
                                   timestamps=ts.copy(), duration=int(duration_ticks))
    return out


def meta_lines(meta: dict) -> str:
    lines = []
    for k in sorted(meta):
        v = meta[k]
        if isinstance(v, float):
            v = FLOAT_FMT % v
        lines.append(f"# {k} = {v}")
    return "\n".join(lines)


def write_correlogram_csv(path: str, c: Correlogram, meta: dict | None = None) -> None:
    meta_all = dict(c.meta)
    meta_all.update(meta or {})
    rows = [",".join((FLOAT_FMT % c.lag_grid[i], FLOAT_FMT % c.values[i],
                      FLOAT_FMT % c.stderr[i], str(int(c.counts[i]))))
            for i in range(c.lag_grid.size)]
    text = meta_lines(meta_all) + "\ntau_ns,value,stderr,counts\n" + "\n".join(rows) + "\n"
    atomic_write_text(path, text)


def read_correlogram_csv(path: str) -> Correlogram:
    meta = {}
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    k, v = line[1:].split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            if line.startswith("tau_ns"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(f"{path}: expected 4 columns, got {len(parts)}")
            rows.append(parts)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    return Correlogram(lag_grid=arr[:, 0], values=arr[:, 1], stderr=arr[:, 2],
                       counts=arr[:, 3].astype(np.int64),
                       total_pairs=int(arr[:, 3].sum()), meta=meta)


def write_g3map_csv(path: str, m: G3Map, meta: dict | None = None) -> None:
    meta_all = dict(m.meta)
    meta_all.update(meta or {})
    rows = []
    for i, d in enumerate(m.delta_grid):
        for j, t in enumerate(m.tau_grid):
            rows.append(",".join((FLOAT_FMT % d, FLOAT_FMT % t,
                                  FLOAT_FMT % m.values[i, j], FLOAT_FMT % m.stderr[i, j],
                                  str(int(m.counts[i, j])))))
    text = (meta_lines(meta_all) + "\ndelta_ns,tau_ns,value,stderr,counts\n"
            + "\n".join(rows) + "\n")
    atomic_write_text(path, text)


def write_report(path: str, pairs: dict, meta: dict | None = None) -> None:
    """Write key = value lines (fit results and similar)."""
    body = []
    for k, v in pairs.items():
        if isinstance(v, float):
            v = FLOAT_FMT % v
        body.append(f"{k} = {v}")
    text = meta_lines(meta or {}) + ("\n" if meta else "") + "\n".join(body) + "\n"
    atomic_write_text(path, text)


def read_report(path: str) -> dict:
    """Read a key = value report back into a dict of strings."""
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    if not out:
        raise ParseError(f"{path}: no key = value lines")
    return out

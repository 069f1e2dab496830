"""Measurement-chain emulation: splitters, detector imperfections, gated TAC.

The chain mirrors a three-detector coincidence setup: one splitter sends
photons to detector 1 or onward, a second splits the remainder between
detectors 2 and 3.  Detector 1 opens a gate (delayed by the configured
delay line); the first detector-2 event inside an open gate arms the
time-to-amplitude converter, and the first detector-3 event inside the
converter range stops it.  Stop minus start lags are histogrammed.

Negative lags are physical here: the stop channel is treated as running
through a delay of one full converter range, so stops that precede the
start in real time by up to tac_range are still converted.  The converter
is busy for one full range after each start and records at most one stop
per start, like the hardware it models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rngstreams
from .binning import LagBins
from .errors import DomainError, EmptyStreams, ZeroBaseline
from .estimators import Correlogram
from .events import EventStream


@dataclass(frozen=True)
class AcquisitionConfig:
    """Detection-chain parameters (times in ns, rates in counts/ns)."""

    split_ratios: tuple = (1.0 / 3.0, 0.5)   # (to D1 at BS1, to D2 at BS2)
    efficiency: tuple = (1.0, 1.0, 1.0)      # per detector
    dead_time: float = 0.0
    dark_rate: float = 0.0
    gate_width: float = 8.0
    delay_delta: float = 0.0                 # delay-line setting
    tac_range: float = 500.0
    jitter_sigma: float = 0.0
    tac_bin: float = 1.0                     # histogram bin width

    def __post_init__(self):
        r1, r2 = self.split_ratios
        if not (0.0 <= r1 <= 1.0 and 0.0 <= r2 <= 1.0):
            raise DomainError("split ratios must be in [0, 1]")
        if len(self.efficiency) != 3 or any(not 0.0 <= e <= 1.0 for e in self.efficiency):
            raise DomainError("need three efficiencies in [0, 1]")
        if self.dead_time < 0 or self.dark_rate < 0 or self.jitter_sigma < 0:
            raise DomainError("dead_time, dark_rate, jitter_sigma must be >= 0")
        if not self.gate_width > 0:
            raise DomainError("gate_width must be > 0")
        if not self.tac_range > 0:
            raise DomainError("tac_range must be > 0")
        if self.delay_delta < 0:
            raise DomainError("delay_delta must be >= 0")
        if not self.tac_bin > 0:
            raise DomainError("tac_bin must be > 0")


@dataclass
class TacHistogram:
    """Start-stop histogram of one gated acquisition."""

    delta: float               # ns, nominal delay-line setting
    effective_delta: float     # ns, mean realized start-to-gate-origin delay
    bin_width: float           # ns
    tau_grid: np.ndarray       # ns, centered bin centers
    counts: np.ndarray
    n_starts: int
    livetime: float            # ns of gate-open, disarmed time
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if int(self.counts.sum()) > self.n_starts:
            raise DomainError("cannot record more stops than starts")


def _dead_time_filter(ticks: np.ndarray, dead: int) -> np.ndarray:
    """Non-paralyzable dead time: drop events closer than `dead` ticks to the
    last accepted one."""
    if dead <= 0 or ticks.size == 0:
        return ticks
    keep = np.zeros(len(ticks), dtype=bool)
    last = -dead - 1
    for i, t in enumerate(ticks):
        if t - last >= dead:
            keep[i] = True
            last = t
    return ticks[keep]


def route(stream: EventStream, cfg: AcquisitionConfig, seed: int):
    """Split one stream over the three detectors with their imperfections.

    Each photon is routed independently (detector 1 with probability r1,
    otherwise detector 2 with probability r2, else detector 3), then per
    detector: efficiency thinning, Gaussian timing jitter, dark-count
    injection, and dead-time removal, in that order.  Dark counts pass
    through the dead-time filter together with real events so the
    minimum-separation guarantee holds on the outputs.
    """
    rng = rngstreams.derive(seed, rngstreams.NS_ROUTE)
    r1, r2 = cfg.split_ratios
    res = stream.resolution
    dur = stream.duration
    ticks = stream.ticks_i64()
    u = rng.random(len(ticks))
    to_d1 = u < r1
    u2 = rng.random(len(ticks))
    to_d2 = ~to_d1 & (u2 < r2)
    to_d3 = ~to_d1 & ~to_d2
    routed = (ticks[to_d1], ticks[to_d2], ticks[to_d3])

    sigma_ticks = cfg.jitter_sigma * 1000.0 / res
    dead_ticks = int(round(cfg.dead_time * 1000.0 / res))
    out = []
    for det, t in enumerate(routed):
        if cfg.efficiency[det] < 1.0:
            t = t[rng.random(len(t)) < cfg.efficiency[det]]
        if cfg.jitter_sigma > 0 and len(t):
            t = t + np.round(rng.normal(0.0, sigma_ticks, len(t))).astype(np.int64)
            t = np.clip(t, 0, dur)
        if cfg.dark_rate > 0:
            n_dark = rng.poisson(cfg.dark_rate * stream.duration_ns)
            dark = rng.integers(0, dur + 1, size=n_dark, dtype=np.int64)
            t = np.concatenate([t, dark])
        t = np.sort(t)
        t = _dead_time_filter(t, dead_ticks)
        out.append(EventStream(resolution=res, channel=det,
                               timestamps=t.astype(np.uint64), duration=dur))
    return tuple(out)


def tac_acquire(d1: EventStream, d2: EventStream, d3: EventStream,
                cfg: AcquisitionConfig) -> TacHistogram:
    """Run the gated start-stop state machine over three sorted streams.

    Per detector-1 event at t1 (only while the converter is idle) a gate
    opens on [t1 + delta, t1 + delta + gate_width].  The first detector-2
    event inside an open gate, while idle, arms the converter; the earliest
    detector-3 event with stop - start >= -tac_range is taken as the stop
    and recorded if it lies within +tac_range, else the conversion times
    out.  The converter is busy until start + tac_range either way.
    Deterministic: no randomness is drawn here.
    """
    if (len(d1) == 0 or len(d2) == 0 or len(d3) == 0) and cfg.dark_rate == 0:
        raise EmptyStreams("an input stream is empty and there are no dark counts")
    if not (d1.resolution == d2.resolution == d3.resolution):
        raise DomainError("streams must share tick resolution")
    res = d1.resolution
    to_ticks = 1000.0 / res
    delay = int(round(cfg.delay_delta * to_ticks))
    width = int(round(cfg.gate_width * to_ticks))
    rng_ticks = int(round(cfg.tac_range * to_ticks))
    # keep only bins whose full width is recordable inside +/- tac_range
    bin_ticks = max(int(round(cfg.tac_bin * to_ticks)), 1)
    half = max(int(np.floor(rng_ticks / bin_ticks - 0.5)), 1)
    bins = LagBins(width_ticks=bin_ticks, k_lo=-half, k_hi=half)
    counts = np.zeros(bins.n_bins, dtype=np.int64)

    t1 = d1.ticks_i64()
    t2 = d2.ticks_i64()
    t3 = d3.ticks_i64()

    gates: list = []           # open-gate list as (lo, hi), FIFO by time
    gate_log: list = []        # all created gates, for livetime
    armed_log: list = []       # busy intervals
    busy_until = -1
    n_starts = 0
    offset_sum = 0

    i1 = 0
    i2 = 0
    n1, n2 = len(t1), len(t2)
    while i1 < n1 or i2 < n2:
        take1 = i2 >= n2 or (i1 < n1 and t1[i1] <= t2[i2])
        if take1:
            tt = int(t1[i1]); i1 += 1
            if tt > busy_until:
                g = (tt + delay, tt + delay + width)
                gates.append(g)
                gate_log.append(g)
        else:
            tt = int(t2[i2]); i2 += 1
            if tt <= busy_until:
                continue
            while gates and gates[0][1] < tt:
                gates.pop(0)
            if gates and gates[0][0] <= tt:
                start = tt
                n_starts += 1
                offset_sum += start - (gates[0][0] - delay)
                j = int(np.searchsorted(t3, start - rng_ticks, side="left"))
                if j < len(t3) and t3[j] - start <= rng_ticks:
                    counts += bins.count(np.array([t3[j] - start], dtype=np.int64))
                busy_until = start + rng_ticks
                armed_log.append((start, busy_until))
    livetime_ticks = _interval_union_minus(gate_log, armed_log)

    eff_delta = cfg.delay_delta
    if n_starts > 0:
        eff_delta = (offset_sum / n_starts) * res / 1000.0
    return TacHistogram(
        delta=cfg.delay_delta, effective_delta=eff_delta,
        bin_width=bins.width_ns(res), tau_grid=bins.centers_ns(res),
        counts=counts, n_starts=n_starts,
        livetime=livetime_ticks * res / 1000.0,
        meta={"gate_width": cfg.gate_width, "tac_range": cfg.tac_range},
    )


def _interval_union_minus(gates, busy) -> float:
    """Measure of union(gates) minus union(busy), all in ticks."""
    def merged(iv):
        out = []
        for lo, hi in sorted(iv):
            if out and lo <= out[-1][1]:
                out[-1][1] = max(out[-1][1], hi)
            else:
                out.append([lo, hi])
        return out

    g = merged(gates)
    b = merged(busy)
    total = 0.0
    bi = 0
    for lo, hi in g:
        seg = hi - lo
        while bi < len(b) and b[bi][1] <= lo:
            bi += 1
        k = bi
        while k < len(b) and b[k][0] < hi:
            seg -= max(0, min(hi, b[k][1]) - max(lo, b[k][0]))
            k += 1
        total += seg
    return total


def normalize_g3(h: TacHistogram, rates) -> Correlogram:
    """Convert a start-stop histogram to a normalized third-order slice.

    The accidental-coincidence baseline per bin is the product of the live
    start count, the stop singles rate, and the bin width: with that
    denominator an uncorrelated stop stream lands at 1 regardless of how
    correlated the start pairs are.  The estimate is therefore the
    start-conditioned triple correlator, the quantity the closed-form
    classical and quantum predictions describe; it coincides with the
    unconditioned one whenever the start-pair correlation at the working
    delay is 1 (uncorrelated light, or delays beyond the correlation time).
    """
    if len(rates) != 3:
        raise DomainError("need per-detector rates (r1, r2, r3)")
    rate3 = float(rates[2])
    if rate3 <= 0:
        raise ZeroBaseline("stop singles rate is zero")
    if h.n_starts <= 0:
        raise ZeroBaseline("no starts recorded")
    baseline = h.n_starts * rate3 * h.bin_width
    values = h.counts / baseline
    stderr = np.sqrt(np.maximum(h.counts, 1)) / baseline
    return Correlogram(
        lag_grid=h.tau_grid.copy(), values=values, stderr=stderr,
        counts=h.counts.copy(), total_pairs=int(h.counts.sum()),
        meta={"kind": "g3_slice", "delta": h.delta, "effective_delta": h.effective_delta,
              "n_starts": h.n_starts, "livetime": h.livetime, "bin_ns": h.bin_width},
    )

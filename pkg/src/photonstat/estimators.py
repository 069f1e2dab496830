"""Correlator and spectrum estimators operating directly on timestamp streams.

Pair and triple coincidences are counted with sorted searchsorted sweeps
(never FFT binning) so partial histograms from disjoint time segments merge
bin-exactly.  Normalization uses per-bin overlap livetime, which removes the
boundary bias that a single global duration correction leaves at long lags.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .binning import LagBins, boundary_search_spec, make_lag_bins, make_lag_bins_range
from .errors import DomainError, EmptyStream, GridNotUniform, PeakNotFound
from .events import EventStream


@dataclass
class Correlogram:
    """Binned correlator estimate with Poisson standard errors.

    lag_grid holds uniform bin centers in ns (symmetric about 0 for direct
    stream estimates).  values are dimensionless normalized correlations.
    """

    lag_grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    total_pairs: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lag_grid = np.asarray(self.lag_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = self.lag_grid.size
        if not (self.values.size == self.stderr.size == self.counts.size == n):
            raise DomainError("correlogram arrays must have equal length")
        if n >= 2:
            d = np.diff(self.lag_grid)
            if np.any(d <= 0) or (d.max() - d.min()) > 1e-9 * abs(d.mean()):
                raise DomainError("lag grid must be strictly increasing and uniform")

    @property
    def bin_width(self) -> float:
        return float(self.lag_grid[1] - self.lag_grid[0]) if self.lag_grid.size > 1 else 0.0


@dataclass
class G3Map:
    """Two-dimensional triple-coincidence estimate over (delta, tau)."""

    delta_grid: np.ndarray     # ns, centers of the first-pair delay bins
    tau_grid: np.ndarray       # ns, centered stop-lag bins
    values: np.ndarray         # (n_delta, n_tau)
    stderr: np.ndarray
    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    def row(self, i: int) -> Correlogram:
        """Extract the tau slice at delta_grid[i] as a Correlogram."""
        meta = dict(self.meta)
        meta["delta"] = float(self.delta_grid[i])
        return Correlogram(
            lag_grid=self.tau_grid.copy(),
            values=self.values[i].copy(),
            stderr=self.stderr[i].copy(),
            counts=self.counts[i].copy(),
            total_pairs=int(self.counts[i].sum()),
            meta=meta,
        )


@dataclass
class HarmonicSpectrum:
    """Windowed Fourier amplitudes of a correlogram's modulation."""

    freq_grid: np.ndarray      # rad/ns
    amplitudes: np.ndarray     # amplitude of (values - 1) per frequency bin
    fundamental: float         # rad/ns, interpolated dominant peak
    harmonic_amps: np.ndarray  # amplitude at k*fundamental, k = 1..K


def _mean_livetime(lo: float, hi: float, t_a: float, t_b: float) -> float:
    """Mean of lt(l) = |{a in [0,Ta]: a+l in [0,Tb]}| over the lag bin [lo, hi].

    lt is piecewise linear with kinks at l = 0, Tb-Ta, -Ta, Tb; integrating
    with trapezoids between kink splits is exact.
    """

    def lt(l):
        return max(0.0, min(t_a, t_b - l) - max(0.0, -l))

    pts = [lo, hi]
    for k in (0.0, t_b - t_a, -t_a, t_b):
        if lo < k < hi:
            pts.append(k)
    pts.sort()
    acc = 0.0
    for x0, x1 in zip(pts[:-1], pts[1:]):
        acc += 0.5 * (lt(x0) + lt(x1)) * (x1 - x0)
    return acc / (hi - lo)


def _pair_lag_counts(a: np.ndarray, b: np.ndarray, bins: LagBins,
                     exclude_self: bool = False,
                     chunk_pairs: int = 4_000_000) -> np.ndarray:
    """Histogram of lags (b - a) into bins, computed in bounded-memory chunks."""
    span_lo = int(np.floor(bins.span_lo_ticks)) - 1
    span_hi = int(np.ceil(bins.span_hi_ticks)) + 1
    lo = np.searchsorted(b, a + span_lo, side="left")
    hi = np.searchsorted(b, a + span_hi, side="right")
    per = hi - lo
    counts = np.zeros(bins.n_bins, dtype=np.int64)
    cum = np.cumsum(per)
    start = 0
    while start < len(a):
        base = int(cum[start - 1]) if start > 0 else 0
        stop = int(np.searchsorted(cum, base + chunk_pairs, side="left")) + 1
        stop = min(stop, len(a))
        p = per[start:stop]
        n_p = int(p.sum())
        if n_p:
            first = np.repeat(lo[start:stop], p)
            offs = np.arange(n_p, dtype=np.int64) - np.repeat(np.cumsum(p) - p, p)
            lags = b[first + offs] - np.repeat(a[start:stop], p)
            counts += bins.count(lags)
        start = stop
    if exclude_self and bins.k_lo <= 0 <= bins.k_hi:
        counts[-bins.k_lo] -= len(a)   # drop the (i, i) zero-lag pairs
    return counts


def estimate_g2(s_a: EventStream, s_b: EventStream, bin_ns: float,
                max_lag_ns: float) -> Correlogram:
    """Normalized pair correlation of lags t_b - t_a within +/- max_lag.

    Passing the same stream object for both arguments gives the
    autocorrelation with the trivial same-event pairs removed.
    """
    if len(s_a) == 0 or len(s_b) == 0:
        raise EmptyStream("g2 estimation needs nonempty streams")
    if s_a.resolution != s_b.resolution:
        raise DomainError("streams must share tick resolution")
    res = s_a.resolution
    bins = make_lag_bins(bin_ns, max_lag_ns, res)
    a = s_a.ticks_i64()
    b = s_b.ticks_i64()
    counts = _pair_lag_counts(a, b, bins, exclude_self=s_a is s_b)
    t_a, t_b = s_a.duration_ns, s_b.duration_ns
    centers = bins.centers_ns(res)
    w = bins.width_ns(res)
    lt = np.array([_mean_livetime(c - w / 2, c + w / 2, t_a, t_b) for c in centers])
    norm = (len(s_a) * len(s_b) / (t_a * t_b)) * w * lt
    ok = norm > 0
    values = np.divide(counts, norm, out=np.zeros(len(counts)), where=ok)
    stderr = np.divide(np.sqrt(np.maximum(counts, 1)), norm,
                       out=np.full(len(counts), np.inf), where=ok)
    return Correlogram(
        lag_grid=centers, values=values, stderr=stderr, counts=counts,
        total_pairs=int(counts.sum()),
        meta={"bin_ns": w, "kind": "g2", "rate_a": s_a.rate_per_ns, "rate_b": s_b.rate_per_ns},
    )


def estimate_cross_g2(s_i: EventStream, s_j: EventStream, bin_ns: float,
                      max_lag_ns: float) -> Correlogram:
    """Cross-correlation between two channels; identical to estimate_g2."""
    c = estimate_g2(s_i, s_j, bin_ns, max_lag_ns)
    c.meta["kind"] = "cross_g2"
    return c


def estimate_g3_map(s1: EventStream, s2: EventStream, s3: EventStream,
                    bins, ranges, chunk: int = 65_536) -> G3Map:
    """Triple-coincidence map over (delta = t2 - t1, tau = t3 - t2).

    bins = (delta_bin_ns, tau_bin_ns); ranges = ((dlo, dhi), (tlo, thi)).
    The delta axis uses half-open uniform bins from dlo; the tau axis uses
    the shared centered-bin convention.  Normalization restricts middle
    events to those whose full (delta, tau) window fits inside all three
    streams, so independent Poisson inputs give exactly flat expectation.
    """
    for s in (s1, s2, s3):
        if len(s) == 0:
            raise EmptyStream("g3 map needs three nonempty streams")
    if not (s1.resolution == s2.resolution == s3.resolution):
        raise DomainError("streams must share tick resolution")
    res = s1.resolution
    (d_bin_ns, t_bin_ns) = bins
    (d_lo_ns, d_hi_ns), (t_lo_ns, t_hi_ns) = ranges
    d_bin = int(round(d_bin_ns * 1000.0 / res))
    d_lo = int(round(d_lo_ns * 1000.0 / res))
    n_d = int(round((d_hi_ns - d_lo_ns) / d_bin_ns))
    if d_bin <= 0 or n_d < 1:
        raise DomainError("bad delta binning")
    d_edges = d_lo + np.arange(n_d + 1, dtype=np.int64) * d_bin
    tbins = make_lag_bins_range(t_bin_ns, t_lo_ns, t_hi_ns, res)
    t_offsets, t_sides = boundary_search_spec(tbins)

    a1 = s1.ticks_i64()
    a2 = s2.ticks_i64()
    a3 = s3.ticks_i64()
    t2_min = max(int(d_edges[-1]), int(np.ceil(-tbins.span_lo_ticks)), 0)
    t2_max = min(s2.duration, s1.duration + int(d_edges[0]),
                 s3.duration - int(np.ceil(tbins.span_hi_ticks)))
    use = a2[(a2 >= t2_min) & (a2 <= t2_max)]
    if use.size == 0:
        raise EmptyStream("no middle events with a full coincidence window")

    acc = np.zeros((n_d, tbins.n_bins), dtype=np.float64)
    for start in range(0, len(use), chunk):
        t2c = use[start:start + chunk]
        # delta in [e_j, e_{j+1})  <=>  t1 in (t2 - e_{j+1}, t2 - e_j]
        cum1 = np.searchsorted(a1, t2c[:, None] - d_edges[None, :], side="right")
        c1 = (cum1[:, :-1] - cum1[:, 1:]).astype(np.float64)
        cum3 = np.empty((len(t2c), len(t_offsets)), dtype=np.int64)
        for m, (off, side) in enumerate(zip(t_offsets, t_sides)):
            cum3[:, m] = np.searchsorted(a3, t2c + off, side=side)
        c3 = np.diff(cum3, axis=1).astype(np.float64)
        acc += c1.T @ c3
    counts = np.round(acc).astype(np.int64)

    rate1 = s1.rate_per_ns
    rate3 = s3.rate_per_ns
    norm = len(use) * rate1 * rate3 * d_bin_ns * t_bin_ns
    values = counts / norm
    stderr = np.sqrt(np.maximum(counts, 1)) / norm
    d_centers = (d_edges[:-1] + 0.5 * d_bin) * (res / 1000.0)
    return G3Map(
        delta_grid=d_centers, tau_grid=tbins.centers_ns(res),
        values=values, stderr=stderr, counts=counts,
        meta={"delta_bin_ns": d_bin_ns, "tau_bin_ns": t_bin_ns,
              "n_middle": int(len(use)), "rate1": rate1, "rate3": rate3},
    )


def _parabolic_peak(x: np.ndarray, y: np.ndarray, j: int):
    """Vertex of the parabola through three points around index j."""
    if j <= 0 or j >= len(y) - 1:
        return float(x[j]), float(y[j])
    y0, y1, y2 = float(y[j - 1]), float(y[j]), float(y[j + 1])
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return float(x[j]), y1
    d = 0.5 * (y0 - y2) / denom
    d = float(np.clip(d, -0.5, 0.5))
    step = float(x[1] - x[0])
    return float(x[j]) + d * step, y1 - 0.25 * (y0 - y2) * d


def fourier_spectrum(c: Correlogram, n_harmonics: int = 3,
                     min_peak_snr: float = 10.0,
                     min_freq: float | None = None,
                     fundamental: float | None = None) -> HarmonicSpectrum:
    """Harmonic content of (values - 1) under a Hann window.

    The fundamental is the largest interpolated peak above the DC mainlobe;
    amplitudes at k*fundamental are read off with parabolic interpolation.
    The correlogram should span at least five oscillation periods for the
    harmonic amplitudes to be meaningful.  min_freq (rad/ns) restricts the
    fundamental search upward, past slow non-oscillatory relaxation lobes.
    Passing `fundamental` (rad/ns) skips peak detection and anchors the
    harmonic reads on a known modulation frequency (the peak location is
    still refined within the nearest bins).  Raises PeakNotFound when no
    peak stands min_peak_snr above the median spectral level (flat input).
    """
    lags = np.asarray(c.lag_grid, dtype=float)
    vals = np.asarray(c.values, dtype=float)
    n = lags.size
    if n < 16:
        raise DomainError("correlogram too short for spectral analysis")
    d = np.diff(lags)
    if np.any(d <= 0) or (d.max() - d.min()) > 1e-9 * abs(d.mean()):
        raise GridNotUniform("fourier_spectrum requires a uniform lag grid")
    dt = float(d.mean())
    w = np.hanning(n)
    spec = np.fft.rfft((vals - 1.0) * w)
    freq = 2.0 * np.pi * np.fft.rfftfreq(n, d=dt)
    amp = np.abs(spec) * (2.0 / w.sum())

    j_min = 3   # Hann mainlobe of the DC term spans 2 bins
    if min_freq is not None:
        j_min = max(j_min, int(np.searchsorted(freq, min_freq)))
    if amp.size <= j_min + 1:
        raise DomainError("spectrum too short to search for a fundamental")
    if fundamental is not None:
        j = int(round(fundamental / (freq[1] - freq[0])))
        if not 1 <= j < len(amp) - 1:
            raise DomainError("anchored fundamental outside the spectral range")
    else:
        j = j_min + int(np.argmax(amp[j_min:]))
        floor = float(np.median(amp[j_min:]))
        if amp[j] <= 0 or amp[j] < min_peak_snr * floor:
            raise PeakNotFound("no significant oscillation peak")
    f1, a1 = _parabolic_peak(freq, amp, j)
    df = freq[1] - freq[0]
    harm = np.zeros(n_harmonics)
    for k in range(1, n_harmonics + 1):
        jk = int(round(k * f1 / df))
        if 1 <= jk < len(amp) - 1:
            _, harm[k - 1] = _parabolic_peak(freq, amp, jk)
        elif 0 <= jk < len(amp):
            harm[k - 1] = amp[jk]
    harm[0] = a1
    return HarmonicSpectrum(freq_grid=freq, amplitudes=amp, fundamental=f1,
                            harmonic_amps=harm)


def correlogram_from_curve(tau_grid, values, meta=None) -> Correlogram:
    """Wrap a model curve as a Correlogram (unit errors, no counts)."""
    tau = np.asarray(tau_grid, dtype=float)
    v = np.asarray(values, dtype=float)
    return Correlogram(lag_grid=tau, values=v, stderr=np.ones_like(v),
                       counts=np.zeros(v.size, dtype=np.int64), total_pairs=0,
                       meta=dict(meta or {}))


def shuffled_surrogate(stream: EventStream, seed: int) -> EventStream:
    """Rate-preserving surrogate: timestamps redrawn uniformly over the duration.

    Destroys all intensity correlations, so estimates on surrogates audit the
    flatness of the normalization.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    ts = np.sort(rng.integers(0, stream.duration + 1, size=len(stream), dtype=np.int64))
    return EventStream(resolution=stream.resolution, channel=stream.channel,
                       timestamps=ts.astype(np.uint64), duration=stream.duration)

"""Shared lag-binning convention for histogram estimators.

Bins are uniform with centers on integer multiples of the bin width.  A lag
(integer ticks) belongs to the bin whose center is nearest; a lag exactly on
a bin boundary rounds away from zero.  Negating every lag therefore maps bin
k onto bin -k with no edge leakage, which is what makes stream-order swaps
and two-sided histograms bin-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class LagBins:
    """Centered lag bins: centers k*width_ticks for k in [k_lo, k_hi]."""

    width_ticks: int
    k_lo: int
    k_hi: int

    def __post_init__(self):
        if self.width_ticks <= 0:
            raise DomainError("bin width must be >= 1 tick")
        if self.k_hi < self.k_lo:
            raise DomainError("empty bin range")

    @property
    def n_bins(self) -> int:
        return self.k_hi - self.k_lo + 1

    def centers_ns(self, resolution_ps: int) -> np.ndarray:
        k = np.arange(self.k_lo, self.k_hi + 1, dtype=np.int64)
        return k * self.width_ticks * (resolution_ps / 1000.0)

    def width_ns(self, resolution_ps: int) -> float:
        return self.width_ticks * resolution_ps / 1000.0

    def index(self, lags_ticks: np.ndarray) -> np.ndarray:
        """Signed bin index of each lag (may fall outside [k_lo, k_hi])."""
        lags = np.asarray(lags_ticks, dtype=np.int64)
        b = np.int64(self.width_ticks)
        k = np.sign(lags) * ((2 * np.abs(lags) + b) // (2 * b))
        return k

    def count(self, lags_ticks: np.ndarray) -> np.ndarray:
        """Histogram of lags into the bins; out-of-range lags are dropped."""
        k = self.index(lags_ticks)
        keep = (k >= self.k_lo) & (k <= self.k_hi)
        return np.bincount((k[keep] - self.k_lo).astype(np.int64), minlength=self.n_bins)

    @property
    def span_lo_ticks(self) -> float:
        return (self.k_lo - 0.5) * self.width_ticks

    @property
    def span_hi_ticks(self) -> float:
        return (self.k_hi + 0.5) * self.width_ticks


def make_lag_bins(bin_ns: float, max_lag_ns: float, resolution_ps: int) -> LagBins:
    """Symmetric bins covering roughly +/- max_lag at the given width."""
    width = int(round(bin_ns * 1000.0 / resolution_ps))
    if width <= 0:
        raise DomainError("bin width below one tick")
    k = int(round(max_lag_ns * 1000.0 / resolution_ps / width))
    if k < 1:
        raise DomainError("max_lag must cover at least one bin on each side")
    return LagBins(width_ticks=width, k_lo=-k, k_hi=k)


def make_lag_bins_range(bin_ns: float, lo_ns: float, hi_ns: float,
                        resolution_ps: int) -> LagBins:
    """Centered bins whose centers cover [lo, hi] ns (possibly asymmetric)."""
    width = int(round(bin_ns * 1000.0 / resolution_ps))
    if width <= 0:
        raise DomainError("bin width below one tick")
    k_lo = int(round(lo_ns * 1000.0 / resolution_ps / width))
    k_hi = int(round(hi_ns * 1000.0 / resolution_ps / width))
    return LagBins(width_ticks=width, k_lo=k_lo, k_hi=k_hi)


def boundary_search_spec(bins: LagBins):
    """Integer searchsorted offsets and sides realizing the boundary rules.

    For each of the n_bins+1 boundaries beta = (k - 1/2)*width this returns
    an integer offset and a side such that, for a reference time t and a
    sorted tick array s, ``searchsorted(s, t + offset, side)`` counts the
    events below the boundary under the away-from-zero tie rule.  Everything
    stays in exact integer arithmetic.
    """
    ks = np.arange(bins.k_lo, bins.k_hi + 2, dtype=np.int64)
    two_beta = (2 * ks - 1) * np.int64(bins.width_ticks)
    offsets = np.empty(len(ks), dtype=np.int64)
    sides = []
    for i, tb in enumerate(two_beta):
        if tb % 2 == 0:
            beta = tb // 2
            offsets[i] = beta
            # tie exactly on the boundary goes away from zero
            sides.append("left" if beta > 0 else "right")
        else:
            offsets[i] = (tb - 1) // 2   # floor of the half-integer boundary
            sides.append("right")
    return offsets, sides

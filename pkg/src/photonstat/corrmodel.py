"""Closed-form correlator models.

The second-order correlator family is a damped harmonic modulation on a
unit baseline,

    g2(tau) = 1 + exp(-decay_rate*|tau|) * sum_k a_k * cos(k*omega*tau + phi_k),

which decays to the stationary value 1 at large lag by construction.  On
top of it sit the two third-order predictions being discriminated:

* classical: g3(delta, tau) = g2(tau) * g2(tau + delta) -- a chaotic
  intensity record correlates all three detections symmetrically;
* quantum:   detection collapses the emitter, erasing correlations with
  everything before the jump, which replaces the product by a piecewise
  conditional form.

Also here: oscillation-contrast (visibility) extraction and the
inverse-square-root scaling of the oscillation period with pump.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSum, DomainError, EmptyWindow


@dataclass(frozen=True)
class HarmonicG2Params:
    """Damped-harmonic g2 model parameters.

    harmonics holds (amplitude, phase) pairs for k = 1..K on the common
    fundamental omega.  The baseline is pinned at 1 (stationary normalized
    correlator); only the modulation is parametric.
    """

    decay_rate: float                 # 1/ns, envelope decay of the modulation
    omega: float                      # rad/ns, fundamental modulation frequency
    harmonics: tuple = ()             # ((a_1, phi_1), ..., (a_K, phi_K))
    baseline: float = 1.0
    # lag domain (ns) on which nonnegativity is checked; None -> auto
    check_domain: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "harmonics", tuple((float(a), float(p)) for a, p in self.harmonics)
        )
        if len(self.harmonics) < 1:
            raise DomainError("need at least one harmonic (K >= 1)")
        if self.decay_rate < 0:
            raise DomainError("decay_rate must be >= 0")
        if not self.omega > 0:
            raise DomainError("omega must be > 0")
        if self.baseline != 1.0:
            raise DomainError("baseline is fixed at 1.0")
        lo, hi = self.check_domain if self.check_domain is not None else self._auto_domain()
        tau = np.linspace(lo, hi, 4001)
        low = float(np.min(eval_g2(self, tau)))
        if low < -1e-9:
            raise DomainError(f"g2 model dips negative (min {low:.3g}) on [{lo:g}, {hi:g}] ns")

    def _auto_domain(self):
        period = 2.0 * np.pi / self.omega
        span = 6.0 * period
        if self.decay_rate > 0:
            span = max(span, 5.0 / self.decay_rate)
        return (-span, span)

    @property
    def k_harmonics(self) -> int:
        return len(self.harmonics)

    @property
    def period(self) -> float:
        """Fundamental modulation period, 2*pi/omega (ns)."""
        return 2.0 * np.pi / self.omega


class G3Model(enum.Enum):
    """Which third-order prediction a G3Prediction evaluates."""

    CLASSICAL = "classical"   # product of pair correlators, no detector back-action
    QUANTUM = "quantum"       # detection erases earlier correlations (jump reduction)


@dataclass(frozen=True)
class G3Prediction:
    """A third-order correlator model: kind, acquisition delay, g2 family."""

    model_kind: G3Model
    delta: float              # ns, delay between the first two detections
    g2: HarmonicG2Params

    def __post_init__(self):
        if self.delta < 0:
            raise DomainError("delta must be >= 0")


@dataclass(frozen=True)
class VisibilityResult:
    v: float
    g2_max: float
    g2_min: float
    window: tuple


def eval_g2(params: HarmonicG2Params, tau):
    """Evaluate the damped-harmonic g2 model at lag tau (ns; scalar or array)."""
    t = np.asarray(tau, dtype=float)
    mod = np.zeros_like(t)
    for k, (a, phi) in enumerate(params.harmonics, start=1):
        mod = mod + a * np.cos(k * params.omega * t + phi)
    out = params.baseline + np.exp(-params.decay_rate * np.abs(t)) * mod
    return out if out.ndim else float(out)


def visibility(correlogram, window) -> VisibilityResult:
    """Oscillation contrast (g2_max - g2_min) / (g2_max + g2_min) inside a lag window.

    Accepts anything with ``lag_grid`` (ns) and ``values`` attributes.  Bins
    whose center falls in [window[0], window[1]] are considered.
    """
    lo, hi = float(window[0]), float(window[1])
    lags = np.asarray(correlogram.lag_grid, dtype=float)
    vals = np.asarray(correlogram.values, dtype=float)
    sel = (lags >= lo) & (lags <= hi)
    if int(sel.sum()) < 2:
        raise EmptyWindow(f"window [{lo:g}, {hi:g}] ns covers {int(sel.sum())} bins; need >= 2")
    v = vals[sel]
    if not np.all(np.isfinite(v)):
        raise DomainError("non-finite correlogram values inside window")
    g2_max = float(v.max())
    g2_min = float(v.min())
    s = g2_max + g2_min
    if s == 0.0:
        raise DegenerateSum("g2_max + g2_min = 0")
    return VisibilityResult(v=(g2_max - g2_min) / s, g2_max=g2_max, g2_min=g2_min, window=(lo, hi))


def classical_g3(pred: G3Prediction, tau):
    """Classical product prediction g2(tau) * g2(tau + delta)."""
    if pred.model_kind is not G3Model.CLASSICAL:
        raise DomainError("prediction is not of the classical kind")
    t = np.asarray(tau, dtype=float)
    out = np.asarray(eval_g2(pred.g2, t)) * np.asarray(eval_g2(pred.g2, t + pred.delta))
    return out if out.ndim else float(out)


def quantum_g3(pred: G3Prediction, tau):
    """Piecewise jump-erasure prediction.

    Regions are half-open so no lag is counted twice:
      tau > 0            -> g2(tau)
      -delta < tau <= 0  -> g2(tau) * g2(delta + tau) / g2(delta)
      tau <= -delta      -> g2(delta + tau)
    The middle region conditions on the detection pair separated by delta;
    the outer regions see only one surviving pair correlation.
    """
    if pred.model_kind is not G3Model.QUANTUM:
        raise DomainError("prediction is not of the quantum kind")
    d = pred.delta
    g2d = eval_g2(pred.g2, d)
    if g2d == 0.0:
        raise ZeroDivisionError("g2(delta) = 0; conditional region undefined")
    t = np.asarray(tau, dtype=float)
    out = np.empty_like(t)
    pos = t > 0
    mid = (t <= 0) & (t > -d)
    tail = t <= -d
    out[pos] = eval_g2(pred.g2, t[pos])
    out[mid] = eval_g2(pred.g2, t[mid]) * eval_g2(pred.g2, d + t[mid]) / g2d
    out[tail] = eval_g2(pred.g2, d + t[tail])
    return out if out.ndim else float(out)


def rabi_period(j_norm, a: float, j0: float = 0.0):
    """Oscillation period vs normalized pump: a * (j_norm - j0)**(-1/2).

    j0 defaults to 0 (period scales with the inverse square root of the
    pump itself); pass j0 = 1 to measure from threshold instead.
    """
    j = np.asarray(j_norm, dtype=float)
    if np.any(j <= j0):
        raise DomainError(f"j_norm must exceed j0 = {j0:g}")
    out = a / np.sqrt(j - j0)
    return out if out.ndim else float(out)

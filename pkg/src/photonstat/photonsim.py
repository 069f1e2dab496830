"""Photon timestamp generators.

Two source models produce event streams:

* a classical doubly stochastic (Cox) process driven by an antiphase
  multimode intensity record -- per-mode intensities oscillate on a common
  diffusing phase with fixed offsets so that, with the default offsets and
  two or more modes, the total intensity is constant;
* quantum-jump sampling of the truncated cavity model -- no-jump evolution
  under the full effective generator, jump times from inverting the norm
  decay, collapse and renormalization at each detection.

Both are deterministic given (params, seed); independent substreams come
from rngstreams so segments and trajectories can run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import rngstreams
from .errors import DomainError, InvalidSampling
from .events import DEFAULT_RESOLUTION_PS, EventStream, ns_to_ticks
from .qdynamics import (CavityModelParams, annihilation_ops, basis_occupations,
                        build_hamiltonian, steady_state)

_JUMP_TIME_TOL_NS = 1e-6


@dataclass(frozen=True)
class MultimodeParams:
    """Antiphase multimode intensity model."""

    n_modes: int
    total_intensity: float          # counts/ns summed over modes
    mod_depth: float                # m in [0, 1]
    omega: float                    # rad/ns
    phase_diffusion: float = 0.0    # D, 1/ns; envelope decays as exp(-D|tau|)
    phase_offsets: tuple | None = None   # rad; default 2*pi*k/N
    seed: int = 0

    def __post_init__(self):
        if self.n_modes < 1:
            raise DomainError("n_modes must be >= 1")
        if not 0.0 <= self.mod_depth <= 1.0:
            raise DomainError("mod_depth must be in [0, 1]")
        if not self.omega > 0:
            raise DomainError("omega must be > 0")
        if self.total_intensity < 0:
            raise DomainError("total_intensity must be >= 0")
        if self.phase_diffusion < 0:
            raise DomainError("phase_diffusion must be >= 0")
        if self.phase_offsets is not None:
            offs = tuple(float(x) for x in self.phase_offsets)
            if len(offs) != self.n_modes:
                raise DomainError("phase_offsets length must equal n_modes")
            object.__setattr__(self, "phase_offsets", offs)

    def offsets(self) -> np.ndarray:
        if self.phase_offsets is not None:
            return np.array(self.phase_offsets)
        return 2.0 * np.pi * np.arange(self.n_modes) / self.n_modes


@dataclass
class IntensityTrace:
    """Sampled per-mode intensities on a uniform time grid."""

    dt: float                 # ns between samples
    samples: np.ndarray       # (n_modes, n_samples), counts/ns
    duration: float           # ns covered

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if np.any(self.samples < 0):
            raise DomainError("intensities must be nonnegative")

    @property
    def n_modes(self) -> int:
        return self.samples.shape[0]

    def times(self) -> np.ndarray:
        return np.arange(self.samples.shape[1]) * self.dt

    def mode_sum(self, modes=None) -> np.ndarray:
        rows = self.samples if modes is None else self.samples[list(modes)]
        return rows.sum(axis=0)


def multimode_intensity(p: MultimodeParams, duration: float, dt: float) -> IntensityTrace:
    """Sample the per-mode intensity record on a grid of step dt (ns).

    Mode k carries (I0/N) * (1 + m*cos(Omega*t + phi(t) + offset_k)) with a
    common Wiener phase phi of variance 2*D*t.  dt must resolve the
    oscillation with at least 20 samples per period.
    """
    period = 2.0 * np.pi / p.omega
    if dt <= 0 or dt > period / 20.0:
        raise InvalidSampling(f"dt must be positive and <= {period / 20.0:g} ns "
                              f"(20 samples per {period:g} ns period)")
    if duration <= 0:
        raise DomainError("duration must be > 0")
    n = int(np.ceil(duration / dt)) + 1
    rng = rngstreams.derive(p.seed, rngstreams.NS_PHASE)
    args = np.arange(n, dtype=np.float64)
    args *= p.omega * dt
    if p.phase_diffusion > 0:
        args[1:] += np.cumsum(
            rng.normal(0.0, np.sqrt(2.0 * p.phase_diffusion * dt), n - 1))
    offs = p.offsets()
    per_mode = p.total_intensity / p.n_modes
    samples = np.empty((p.n_modes, n))
    for k in range(p.n_modes):
        samples[k] = per_mode * (1.0 + p.mod_depth * np.cos(args + offs[k]))
    return IntensityTrace(dt=dt, samples=samples, duration=float(duration))


def sample_cox(trace: IntensityTrace, seed: int, modes=None, channel: int = 0,
               resolution: int = DEFAULT_RESOLUTION_PS, n_segments: int = 1) -> EventStream:
    """Thinning sampler for the doubly stochastic process of selected modes.

    Candidate events run at the trace maximum and are kept with probability
    rate(t)/max; the expected count is the integral of the selected
    intensity.  With n_segments > 1 the duration is split and each segment
    draws from substream (NS_COX, segment), which is the documented
    per-segment derivation for parallel generation.
    """
    rate = trace.mode_sum(modes)
    t_grid = trace.times()
    lam_max = float(rate.max()) if rate.size else 0.0
    duration = trace.duration
    ticks = []
    if lam_max > 0:
        edges = np.linspace(0.0, duration, n_segments + 1)
        for i in range(n_segments):
            rng = rngstreams.derive(seed, rngstreams.NS_COX, i)
            seg = edges[i + 1] - edges[i]
            n_cand = rng.poisson(lam_max * seg)
            times = np.sort(rng.uniform(edges[i], edges[i + 1], n_cand))
            keep = rng.random(n_cand) < np.interp(times, t_grid, rate) / lam_max
            ticks.append(ns_to_ticks(times[keep], resolution))
    ts = np.concatenate(ticks) if ticks else np.empty(0, dtype=np.uint64)
    dur_ticks = int(round(duration * 1000.0 / resolution))
    return EventStream(resolution=resolution, channel=channel,
                       timestamps=ts, duration=dur_ticks)


class _Propagator:
    """No-jump propagation via one-time eigendecomposition of the generator."""

    def __init__(self, h: np.ndarray):
        self.dim = h.shape[0]
        lam, vec = np.linalg.eig(h)
        vinv = np.linalg.inv(vec)
        recon = vec @ (lam[:, None] * vinv)
        if np.linalg.norm(recon - h) > 1e-9 * (np.linalg.norm(h) + 1.0):
            raise DomainError("generator is too close to defective for eigen propagation")
        self.lam = lam
        self.vec = vec
        self.vinv = vinv
        self.gram = vec.conj().T @ vec

    def modal(self, c: np.ndarray) -> np.ndarray:
        return self.vinv @ c

    def from_modal(self, w: np.ndarray, t: float) -> np.ndarray:
        return self.vec @ (np.exp(-1j * self.lam * t) * w)

    def norm_sq_fn(self, w: np.ndarray):
        """Closure evaluating ||exp(-iHt) c||^2 from the modal vector w."""
        coef = (self.gram * np.outer(w.conj(), w)).ravel()
        mu = (1j * (self.lam.conj()[:, None] - self.lam[None, :])).ravel()
        def norm_sq(t: float) -> float:
            return float(np.real(coef @ np.exp(mu * t)))
        return norm_sq


def _find_jump_time(norm_sq, r: float, t_limit: float, t_scale: float):
    """First t with ||psi(t)||^2 = r, or None if it stays above r up to t_limit."""
    if norm_sq(t_limit) > r:
        return None
    if norm_sq(0.0) <= r:   # roundoff freak case: the draw grazes the start norm
        return 0.0
    hi = min(max(t_scale, 1e-9), t_limit)
    while norm_sq(hi) > r:
        hi = min(hi * 4.0, t_limit)
    return brentq(lambda t: norm_sq(t) - r, 0.0, hi, xtol=_JUMP_TIME_TOL_NS)


def quantum_trajectory(p: CavityModelParams, duration: float, seed: int,
                       resolution: int = DEFAULT_RESOLUTION_PS):
    """Sample one quantum-jump trajectory; returns (photon, excitation) streams.

    The normalized state evolves under the full effective generator (drive
    included, no pinning).  A jump fires when the squared norm decays to a
    uniform draw; the jump time is located to 1e-6 ns.  Channel selection is
    proportional to kappa*<n_a> vs gamma*<n_b> of the pre-jump state; the
    matching annihilation operator is applied and the state renormalized.
    Photon jumps are the detected events; excitation jumps are returned on
    the second stream.
    """
    if duration <= 0:
        raise DomainError("duration must be > 0")
    h = build_hamiltonian(p)
    prop = _Propagator(h)
    a_op, b_op = annihilation_ops(p.n_max)
    na, nb = basis_occupations(p.n_max)
    rng = rngstreams.derive(seed, rngstreams.NS_TRAJECTORY)

    if p.drive_eps > 0:
        psi = steady_state(h, p).amplitudes
    else:
        psi = np.zeros(p.dim, dtype=np.complex128)
        psi[0] = 1.0
    decay_scale = 2.0 / (p.kappa + p.gamma_b + 1e-12)

    t = 0.0
    photon_times, excitation_times = [], []
    while True:
        r = rng.random()
        w = prop.modal(psi)
        norm_sq = prop.norm_sq_fn(w)
        s = _find_jump_time(norm_sq, r, duration - t, decay_scale)
        if s is None:
            break
        t += s
        pre = prop.from_modal(w, s)
        wa = p.kappa * float(np.sum(na * np.abs(pre) ** 2))
        wb = p.gamma_b * float(np.sum(nb * np.abs(pre) ** 2))
        if wa + wb <= 0:
            break
        if rng.random() * (wa + wb) < wa:
            psi = a_op @ pre
            photon_times.append(t)
        else:
            psi = b_op @ pre
            excitation_times.append(t)
        psi = psi / np.linalg.norm(psi)

    dur_ticks = int(round(duration * 1000.0 / resolution))
    photons = EventStream(resolution=resolution, channel=0,
                          timestamps=ns_to_ticks(photon_times, resolution),
                          duration=dur_ticks)
    excitations = EventStream(resolution=resolution, channel=1,
                              timestamps=ns_to_ticks(excitation_times, resolution),
                              duration=dur_ticks)
    return photons, excitations

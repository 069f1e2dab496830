"""Truncated two-mode quantum model with loss-biased (non-Hermitian) evolution.

A photon mode (a) exchanges energy with a bosonized material excitation (b)
through a coherent coupling while a weak coherent drive feeds the photon
mode; decay enters as the anti-Hermitian bias -(i/2)(kappa n_a + gamma n_b).
The Hilbert space is truncated at n_a + n_b <= n_max; the hard excitation
cap is what makes the photon statistics of the driven system nontrivial.

Conditional correlators follow the jump picture: a detection applies the
annihilation operator, the collapsed state relaxes back toward the pinned
steady state, and the transient photon-number modulation during that
recovery is the g2 oscillation.  Pinning means the vacuum amplitude is held
fixed while the excited manifold evolves, so the weak-drive steady state is
an exact fixed point of the evolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import DomainError, SingularSystem, ToleranceNotMet, ZeroPhotonNumber

_EVOLVE_RTOL = 1e-9


@dataclass(frozen=True)
class CavityModelParams:
    """Parameters of the driven, damped two-mode model."""

    coupling_g: float          # rad/ns, photon <-> excitation exchange
    kappa: float               # 1/ns, photon decay
    gamma_b: float             # 1/ns, excitation decay
    detuning_a: float = 0.0    # rad/ns
    detuning_b: float = 0.0    # rad/ns
    drive_eps: float = 0.0     # rad/ns, coherent pump amplitude
    n_max: int = 3             # total-excitation truncation

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError("kappa must be > 0")
        if self.gamma_b < 0:
            raise DomainError("gamma_b must be >= 0")
        if self.coupling_g < 0:
            raise DomainError("coupling_g must be >= 0")
        if self.drive_eps < 0:
            raise DomainError("drive_eps must be >= 0")
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise DomainError("n_max must be an integer >= 2")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self) -> int:
        return (self.n_max + 1) * (self.n_max + 2) // 2


@lru_cache(maxsize=32)
def basis_occupations(n_max: int):
    """(n_a, n_b) occupation arrays; states ordered by total n, then n_a."""
    na, nb = [], []
    for n in range(n_max + 1):
        for k in range(n + 1):
            na.append(k)
            nb.append(n - k)
    return np.array(na), np.array(nb)


@lru_cache(maxsize=32)
def _basis_index(n_max: int):
    na, nb = basis_occupations(n_max)
    return {(int(a), int(b)): i for i, (a, b) in enumerate(zip(na, nb))}


@lru_cache(maxsize=32)
def annihilation_ops(n_max: int):
    """Matrix representations of the two annihilation operators."""
    na, nb = basis_occupations(n_max)
    idx = _basis_index(n_max)
    d = len(na)
    a_op = np.zeros((d, d))
    b_op = np.zeros((d, d))
    for i in range(d):
        if na[i] > 0:
            a_op[idx[(na[i] - 1, nb[i])], i] = np.sqrt(na[i])
        if nb[i] > 0:
            b_op[idx[(na[i], nb[i] - 1)], i] = np.sqrt(nb[i])
    return a_op, b_op


@dataclass(frozen=True)
class QuantumState:
    """Complex amplitudes over the truncated |n_a, n_b> basis."""

    amplitudes: np.ndarray
    n_max: int
    norm_sq: float = -1.0      # filled in automatically

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        object.__setattr__(self, "amplitudes", amps)
        d = (self.n_max + 1) * (self.n_max + 2) // 2
        if amps.shape != (d,):
            raise DomainError(f"amplitude vector must have dimension {d}")
        object.__setattr__(self, "norm_sq", float(np.vdot(amps, amps).real))

    def normalized(self) -> "QuantumState":
        if self.norm_sq <= 0:
            raise ZeroPhotonNumber("cannot normalize a zero state")
        return QuantumState(self.amplitudes / np.sqrt(self.norm_sq), self.n_max)


@dataclass(frozen=True)
class G2Curve:
    """Normalized photon correlation on a lag grid."""

    tau_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        val = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "values", val)
        if tau.size != val.size:
            raise DomainError("grid/value size mismatch")
        if tau.size >= 2 and np.any(np.diff(tau) <= 0):
            raise DomainError("tau grid must be strictly increasing")
        if not np.all(np.isfinite(val)):
            raise DomainError("curve values must be finite")


def photon_number(state: QuantumState) -> float:
    """<n_a> of a (possibly unnormalized) state; 0 for the zero state."""
    if state.norm_sq == 0:
        return 0.0
    na, _ = basis_occupations(state.n_max)
    return float(na @ np.abs(state.amplitudes) ** 2) / state.norm_sq


def excitation_number(state: QuantumState) -> float:
    if state.norm_sq == 0:
        return 0.0
    _, nb = basis_occupations(state.n_max)
    return float(nb @ np.abs(state.amplitudes) ** 2) / state.norm_sq


def build_hamiltonian(p: CavityModelParams) -> np.ndarray:
    """Effective (non-Hermitian) generator on the truncated basis."""
    na, nb = basis_occupations(p.n_max)
    a_op, b_op = annihilation_ops(p.n_max)
    h = np.diag((p.detuning_a - 0.5j * p.kappa) * na
                + (p.detuning_b - 0.5j * p.gamma_b) * nb).astype(np.complex128)
    h += p.coupling_g * (a_op.T @ b_op + b_op.T @ a_op)
    h += p.drive_eps * (a_op + a_op.T)
    return h


def _solve_excited_fixed_point(h: np.ndarray, vac_amp: complex) -> np.ndarray:
    """Excited amplitudes making the pinned system stationary."""
    try:
        x = np.linalg.solve(h[1:, 1:], -h[1:, 0] * vac_amp)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("excited-manifold system is singular") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystem("excited-manifold solve produced non-finite amplitudes")
    return x


def steady_state(h: np.ndarray, p: CavityModelParams) -> QuantumState:
    """Weak-drive stationary state: vacuum amplitude pinned to 1, then normalized."""
    if not p.drive_eps > 0:
        raise DomainError("steady state requires a nonzero drive")
    x = _solve_excited_fixed_point(h, 1.0)
    c = np.concatenate(([1.0 + 0.0j], x))
    return QuantumState(c / np.linalg.norm(c), p.n_max)


def apply_annihilation(state: QuantumState, mode: str = "a") -> QuantumState:
    """Apply the annihilation operator of the chosen mode (no renormalization)."""
    if mode not in ("a", "b"):
        raise DomainError("mode must be 'a' or 'b'")
    a_op, b_op = annihilation_ops(state.n_max)
    op = a_op if mode == "a" else b_op
    return QuantumState(op @ state.amplitudes, state.n_max)


def evolve(state: QuantumState, h: np.ndarray, t: float,
           pinned: bool = False) -> QuantumState:
    """Propagate the state for time t (ns) under the effective generator.

    With pinned=True the vacuum amplitude is held fixed and only the excited
    manifold evolves (the convention used for conditional correlators); the
    drive then enters through the vacuum as a constant source.  Without
    pinning this is the plain matrix exponential, and for zero drive the
    norm is non-increasing.
    """
    if t < 0:
        raise DomainError("evolution time must be >= 0")
    c = state.amplitudes
    if t == 0:
        return QuantumState(c.copy(), state.n_max)
    if pinned:
        src = _solve_excited_fixed_point(h, c[0])
        trans = scipy.linalg.expm(-1j * t * h[1:, 1:]) @ (c[1:] - src)
        out = np.concatenate(([c[0]], src + trans))
    else:
        out = scipy.linalg.expm(-1j * t * h) @ c
    if not np.all(np.isfinite(out)):
        raise ToleranceNotMet("propagation produced non-finite amplitudes")
    return QuantumState(out, state.n_max)


def _excited_trajectory(h: np.ndarray, c0: np.ndarray, taus: np.ndarray):
    """Pinned-vacuum excited amplitudes at each tau; (vacuum amp, (d-1, nt))."""
    hee = h[1:, 1:]
    cv = c0[0]
    src = _solve_excited_fixed_point(h, cv)
    d0 = c0[1:] - src
    lam, vec = np.linalg.eig(hee)
    use_eig = False
    try:
        vinv = np.linalg.inv(vec)
        recon = vec @ (lam[:, None] * vinv)
        use_eig = np.linalg.norm(recon - hee) <= _EVOLVE_RTOL * (np.linalg.norm(hee) + 1.0)
    except np.linalg.LinAlgError:
        use_eig = False
    if use_eig:
        w = vinv @ d0
        phases = np.exp(-1j * np.outer(lam, taus))
        amps = src[:, None] + vec @ (phases * w[:, None])
    else:
        # defective generator (exceptional point): direct exponentials
        amps = np.empty((hee.shape[0], len(taus)), dtype=np.complex128)
        for k, t in enumerate(taus):
            amps[:, k] = src + scipy.linalg.expm(-1j * t * hee) @ d0
    if not np.all(np.isfinite(amps)):
        raise ToleranceNotMet("trajectory propagation produced non-finite amplitudes")
    return cv, amps


def _normalized_intensity_curve(h: np.ndarray, start: np.ndarray,
                                tau_grid: np.ndarray, p: CavityModelParams) -> np.ndarray:
    """Photon-number transient of `start`, normalized to its late-time plateau."""
    tau = np.asarray(tau_grid, dtype=float)
    if tau.size == 0 or np.any(tau < 0):
        raise DomainError("tau grid must be nonempty and nonnegative")
    na, _ = basis_occupations(p.n_max)
    tau_norm = max(20.0 / p.kappa, float(tau[-1]))
    _, amps = _excited_trajectory(h, start, np.append(tau, tau_norm))
    raw = na[1:] @ (np.abs(amps) ** 2)
    denom = float(raw[-1])
    if denom <= 0 or not np.isfinite(denom):
        raise ZeroPhotonNumber("no photon population at the normalization plateau")
    return raw[:-1] / denom


def g2_from_steady_state(h: np.ndarray, psi_ss: QuantumState,
                         tau_grid, p: CavityModelParams) -> G2Curve:
    """Photon correlation after one detection from the steady state.

    The detection collapses psi_ss with the photon annihilation operator;
    the conditional photon number along pinned evolution, divided by its
    re-equilibrated plateau (evaluated at max(20/kappa, tau_grid[-1])),
    is the normalized correlation, so the curve ends at 1.
    """
    if photon_number(psi_ss) <= 0:
        raise ZeroPhotonNumber("steady state has no photon population")
    phi0 = apply_annihilation(psi_ss, "a")
    values = _normalized_intensity_curve(h, phi0.amplitudes, tau_grid, p)
    return G2Curve(tau_grid=np.asarray(tau_grid, dtype=float), values=values)


def g2_conditional(h: np.ndarray, phi_at_tau1: QuantumState,
                   tau2_grid, p: CavityModelParams) -> G2Curve:
    """Correlation conditioned on a second detection at lag tau1.

    phi_at_tau1 is the collapsed state propagated (pinned) to the time of
    the second detection; annihilating it again and repeating the intensity
    construction gives the doubly conditional correlation.  If the state
    carries no two-photon component the second collapse is the zero state.
    """
    chi0 = apply_annihilation(phi_at_tau1, "a")
    if chi0.norm_sq == 0:
        raise ZeroPhotonNumber("state has no two-photon component to collapse")
    values = _normalized_intensity_curve(h, chi0.amplitudes, tau2_grid, p)
    return G2Curve(tau_grid=np.asarray(tau2_grid, dtype=float), values=values)

"""Shipped model parameter sets used by CLI defaults and the test suite.

Each set serves one purpose:

* UNDERDAMPED -- dressed-mode resonant drive with a hard two-excitation
  cap: healthy photon rate, visible oscillation, and strong detection
  back-action; the third-order discrimination runs live here.
* WEAK_DRIVE -- drive turned far down so the pinned pure-state correlator
  stays a faithful description of the sampled stream (the closure error
  scales with drive squared); used for trajectory/curve cross-validation.
* COHERENT -- uncoupled, weakly driven: photon statistics flat at 1.
* BLOCKADED -- hard-driven two-excitation ladder; the truncation cap makes
  the stream sub-Poissonian at zero lag (no classical record can do that).
* HARMONIC_COMB_* -- slow losses, zero detuning: the correlation rings at
  the exchange splitting with a clean harmonic comb, whose third line
  needs the three-excitation manifold.
* sweep_params -- maps a normalized pump to the drive for period-scaling
  sweeps: drive power tracks the pump excess over threshold.
"""

from __future__ import annotations

import numpy as np

from .qdynamics import CavityModelParams

UNDERDAMPED = CavityModelParams(
    coupling_g=1.0,      # rad/ns
    kappa=0.12,
    gamma_b=0.02,
    detuning_a=1.0,      # drive resonant with the lower dressed mode
    detuning_b=1.0,
    drive_eps=0.35,
    n_max=2,             # hard cap -> strong detection back-action
)

WEAK_DRIVE = CavityModelParams(
    coupling_g=0.6,
    kappa=0.25,
    gamma_b=0.05,
    detuning_a=0.6,
    detuning_b=0.6,
    drive_eps=0.02,
    n_max=3,
)

# discrimination runs use asymmetric splitters: the stop detector is starved
# so only a few percent of converter windows contain a stop (keeps the
# first-stop bias below the statistical errors)
DISCRIMINATION_SPLITS = (0.45, 0.973)
DISCRIMINATION_DELTA = 8.0
DISCRIMINATION_TAC_RANGE = 24.0

COHERENT = CavityModelParams(
    coupling_g=0.0,
    kappa=2.0,
    gamma_b=0.3,
    drive_eps=0.12,
    n_max=3,
)

BLOCKADED = CavityModelParams(
    coupling_g=0.0,
    kappa=1.0,
    gamma_b=0.5,
    drive_eps=1.0,
    n_max=2,
)

HARMONIC_COMB_TWO = CavityModelParams(
    coupling_g=1.0,
    kappa=0.05,
    gamma_b=0.05,
    drive_eps=0.85,
    n_max=2,
)

HARMONIC_COMB_THREE = CavityModelParams(
    coupling_g=1.0,
    kappa=0.05,
    gamma_b=0.05,
    drive_eps=0.85,
    n_max=3,
)

# Pump sweep: drive power maps linearly onto pump excess over threshold.
SWEEP_KAPPA = 0.15
SWEEP_GAMMA = 0.3
SWEEP_EPS_AT_J2 = 0.6    # drive amplitude at j_norm = 2


def sweep_params(j_norm: float) -> CavityModelParams:
    """Model parameters emulating pump j_norm: drive_eps^2 tracks (j_norm - 1)."""
    if j_norm <= 1.0:
        raise ValueError("sweep is defined above threshold (j_norm > 1)")
    eps = SWEEP_EPS_AT_J2 * np.sqrt(j_norm - 1.0)
    return CavityModelParams(coupling_g=0.0, kappa=SWEEP_KAPPA, gamma_b=SWEEP_GAMMA,
                             drive_eps=float(eps), n_max=2)

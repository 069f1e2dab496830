"""Deterministic derivation of independent random substreams.

Every stochastic component draws from a generator derived as

    SeedSequence(entropy=master_seed, spawn_key=(namespace, *indices))

so a worker (segment, trajectory, detector, ...) can build its own stream
without coordination, runs are reproducible bit-for-bit, and substreams are
statistically independent.  Namespace constants below are part of the
reproducibility contract; never renumber them.
"""

from __future__ import annotations

import numpy as np

NS_PHASE = 1       # common mode-phase diffusion of the intensity model
NS_COX = 2         # doubly stochastic Poisson sampling, then segment index
NS_TRAJECTORY = 3  # quantum-jump trajectory sampling
NS_ROUTE = 4       # detector routing / imperfections


def derive(master_seed: int, *path: int) -> np.random.Generator:
    """Return the PCG64 generator for substream ``path`` of ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))

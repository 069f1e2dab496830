import numpy as np
import pytest

from photonstat.events import EventStream
from photonstat.photonsim import MultimodeParams, multimode_intensity, sample_cox


def poisson_stream(rate_per_ns, duration_ns, seed, channel=0):
    """Homogeneous Poisson stream via the constant-intensity Cox path."""
    p = MultimodeParams(n_modes=1, total_intensity=rate_per_ns, mod_depth=0.0,
                        omega=0.5, seed=seed)
    trace = multimode_intensity(p, duration_ns, dt=0.5)
    return sample_cox(trace, seed, channel=channel)


def stream_from_ns(times, duration_ns, channel=0):
    ts = np.round(np.asarray(times, dtype=float) * 1000.0).astype(np.uint64)
    return EventStream(resolution=1, channel=channel, timestamps=np.sort(ts),
                       duration=int(round(duration_ns * 1000.0)))


def trace_average_g2(trace, tau, modes=None):
    """Independent correlation oracle: direct time average over the sampled record."""
    rate = trace.mode_sum(modes)
    k = int(round(tau / trace.dt))
    a = rate[:-k] if k else rate
    b = rate[k:] if k else rate
    return float(np.mean(a * b) / np.mean(rate) ** 2)


@pytest.fixture(scope="session")
def rng():
    return np.random.Generator(np.random.PCG64(20260808))

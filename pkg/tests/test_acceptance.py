"""Acceptance suite: one test per shipped criterion, one verdict line each.

Run with `pytest -s tests/test_acceptance.py` to see the verdict lines; the
stochastic runs use pinned seeds so every pass is reproducible.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import poisson_stream, stream_from_ns, trace_average_g2
from photonstat import fileio, presets
from photonstat.cli import main as cli_main
from photonstat.corrmodel import G3Model, HarmonicG2Params, visibility
from photonstat.detection import AcquisitionConfig, normalize_g3, route, tac_acquire
from photonstat.estimators import (correlogram_from_curve, estimate_cross_g2,
                                   estimate_g2, estimate_g3_map, fourier_spectrum)
from photonstat.events import merge
from photonstat.fitters import discriminate, fit_g2, fit_inverse_sqrt, g2_params_from_report
from photonstat.photonsim import (MultimodeParams, multimode_intensity,
                                  quantum_trajectory, sample_cox)
from photonstat.qdynamics import build_hamiltonian, g2_from_steady_state, steady_state

OMEGA = 0.5                       # rad/ns for the classical source family


def report(n, ok, text):
    print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {text}")
    assert ok, f"criterion {n}: {text}"


# --------------------------------------------------------------------------
# criterion 1: Poisson baseline, flat g2 and g3 within +-0.03, under 30 s
# --------------------------------------------------------------------------

def test_criterion_1_poisson_baseline():
    t0 = time.monotonic()
    rate, duration = 0.1, 1.0e7          # 1e6 events per stream
    s1 = poisson_stream(rate, duration, seed=1001, channel=0)
    s2 = poisson_stream(rate, duration, seed=1002, channel=1)
    s3 = poisson_stream(rate, duration, seed=1003, channel=2)
    assert min(len(s1), len(s2), len(s3)) > 0.99e6

    c = estimate_g2(s1, s2, bin_ns=1.0, max_lag_ns=50.0)
    g2_dev = float(np.max(np.abs(c.values - 1.0)))

    m = estimate_g3_map(s1, s2, s3, bins=(8.0, 2.0),
                        ranges=((0.0, 64.0), (-16.0, 16.0)))
    g3_dev = float(np.max(np.abs(m.values - 1.0)))
    elapsed = time.monotonic() - t0
    ok = g2_dev < 0.03 and g3_dev < 0.03 and elapsed < 30.0
    report(1, ok, f"poisson baseline flat (g2 dev {g2_dev:.4f}, g3 dev {g3_dev:.4f}, "
                  f"{elapsed:.1f} s)")


# --------------------------------------------------------------------------
# criterion 2: Cox oracle at 1e7 events, under 2 min
# --------------------------------------------------------------------------

def test_criterion_2_cox_oracle():
    t0 = time.monotonic()
    p = MultimodeParams(n_modes=1, total_intensity=1.0, mod_depth=1.0,
                        omega=OMEGA, phase_diffusion=0.0, seed=2001)
    trace = multimode_intensity(p, 1.0e7, dt=0.25)
    s = sample_cox(trace, seed=2001)
    assert len(s) > 0.99e7

    c = estimate_g2(s, s, bin_ns=0.4, max_lag_ns=8.0)
    i0 = c.lag_grid.size // 2
    ipi = i0 + int(round(np.pi / OMEGA / 0.4))
    v0, e0 = c.values[i0], c.stderr[i0]
    vpi, epi = c.values[ipi], c.stderr[ipi]

    # independent record-average oracle at the same lags
    o0 = trace_average_g2(trace, 0.0)
    opi = trace_average_g2(trace, np.pi / OMEGA)
    elapsed = time.monotonic() - t0
    ok = (abs(v0 - 1.5) < 3 * e0 + 0.005 and abs(vpi - 0.5) < 3 * epi + 0.005
          and abs(o0 - 1.5) < 0.01 and abs(opi - 0.5) < 0.01
          and elapsed < 120.0)
    report(2, ok, f"cox oracle g2(0)={v0:.4f}, g2(pi/w)={vpi:.4f} "
                  f"(record oracle {o0:.4f}/{opi:.4f}, {elapsed:.1f} s)")


# --------------------------------------------------------------------------
# criterion 3: seven antiphase modes
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def antiphase_runs():
    n, mdepth = 7, 0.8
    p = MultimodeParams(n_modes=n, total_intensity=0.7, mod_depth=mdepth,
                        omega=OMEGA, phase_diffusion=0.0, seed=3001)
    trace = multimode_intensity(p, 4.0e6, dt=0.25)
    streams = [sample_cox(trace, seed=3100 + k, modes=[k], channel=k)
               for k in range(n)]
    return p, trace, streams


def test_criterion_3_antiphase_structure(antiphase_runs):
    p, trace, streams = antiphase_runs
    mdepth, n = 0.8, 7
    period = 2 * np.pi / OMEGA

    full = merge(streams)
    c_full = estimate_g2(full, full, bin_ns=0.5, max_lag_ns=30.0)
    flat_ok = bool(np.max(np.abs((c_full.values - 1.0) / c_full.stderr)) < 3.5)

    # visibility ladder over growing mode sums
    vis = []
    for k in range(1, n + 1):
        s = merge(streams[:k]) if k > 1 else streams[0]
        c = estimate_g2(s, s, bin_ns=0.25, max_lag_ns=period * 0.55)
        vis.append(visibility(c, (-period / 2, period / 2)).v)
    single_ok = abs(vis[0] - mdepth ** 2 / 2) < 0.02
    mono_ok = all(vis[k + 1] < vis[k] + 0.02 for k in range(n - 1)) and vis[-1] < 0.03

    # cross correlations carry the configured mode phase offsets
    phase_ok = True
    for j, k in ((0, 1), (0, 3)):
        c = estimate_cross_g2(streams[j], streams[k], bin_ns=0.25,
                              max_lag_ns=3 * period)
        win = np.abs(c.lag_grid) <= 2.5 * period
        z = np.sum((c.values[win] - 1.0) * np.exp(-1j * OMEGA * c.lag_grid[win]))
        expected = 2 * np.pi * (k - j) / n
        err = np.angle(np.exp(1j * (np.angle(z) - expected)))
        phase_ok &= bool(abs(err) < np.deg2rad(5.0))

    ok = flat_ok and single_ok and mono_ok and phase_ok
    report(3, ok, f"antiphase modes: sum flat {flat_ok}, single-mode V={vis[0]:.3f} "
                  f"(target {mdepth**2/2:.3f}), ladder {np.round(vis, 3).tolist()}, "
                  f"cross phases within 5 deg {phase_ok}")


# --------------------------------------------------------------------------
# criterion 4: trajectory streams vs amplitude-evolution curves
# --------------------------------------------------------------------------

def test_criterion_4_quantum_cross_validation():
    p = presets.WEAK_DRIVE
    photons, _ = quantum_trajectory(p, duration=2.6e7, seed=4001)
    n_events = len(photons)
    c = estimate_g2(photons, photons, bin_ns=0.5, max_lag_ns=40.0)
    h = build_hamiltonian(p)
    half = np.abs(c.lag_grid)
    grid = np.unique(half)
    curve = g2_from_steady_state(h, steady_state(h, p), grid, p)
    model = curve.values[np.searchsorted(grid, half)]
    worst = float(np.max(np.abs((c.values - model) / c.stderr)))

    pc = presets.COHERENT
    photons0, _ = quantum_trajectory(pc, duration=6.0e6, seed=4002)
    c0 = estimate_g2(photons0, photons0, bin_ns=3.0, max_lag_ns=30.0)
    h0 = build_hamiltonian(pc)
    curve0 = g2_from_steady_state(h0, steady_state(h0, pc),
                                  np.linspace(0.0, 30.0, 61), pc)
    stream_dev = float(np.max(np.abs(c0.values - 1.0)))
    curve_dev = float(np.max(np.abs(curve0.values - 1.0)))

    ok = (n_events >= 1e5 and worst < 3.0
          and stream_dev < 0.03 and curve_dev < 0.03)
    report(4, ok, f"cross-validation: {n_events} photons, worst pull {worst:.2f} sigma; "
                  f"uncoupled case stream dev {stream_dev:.3f} / curve dev {curve_dev:.3f}")


# --------------------------------------------------------------------------
# criterion 5: third harmonic gated by the truncation
# --------------------------------------------------------------------------

def test_criterion_5_two_quantum_harmonics():
    ratios = {}
    for p in (presets.HARMONIC_COMB_TWO, presets.HARMONIC_COMB_THREE):
        h = build_hamiltonian(p)
        ss = steady_state(h, p)
        decay = 0.5 * (p.kappa + p.gamma_b)
        tau = np.linspace(0.0, 10.0 / decay, 16384)
        curve = g2_from_steady_state(h, ss, tau, p)
        spec = fourier_spectrum(correlogram_from_curve(tau, curve.values),
                                n_harmonics=3, fundamental=2 * p.coupling_g)
        ratios[p.n_max] = float(spec.harmonic_amps[2] / spec.harmonic_amps[0])
    ok = ratios[2] < 0.01 and ratios[3] > 0.01
    report(5, ok, f"third-harmonic/fundamental: n_max=2 -> {ratios[2]:.2e}, "
                  f"n_max=3 -> {ratios[3]:.2e}")


# --------------------------------------------------------------------------
# criteria 6 and 7: model discrimination on both source types
# --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def quantum_discrimination():
    from photonstat.events import EventStream
    p = presets.UNDERDAMPED
    photons, _ = quantum_trajectory(p, duration=4.8e7, seed=314159)

    # pair-correlation fit on a time slice (pair counting cost is quadratic
    # in rate x span; the fit is stable well before the full duration)
    cut = int(1.2e7 * 1000)
    head = EventStream(resolution=photons.resolution, channel=0,
                       timestamps=photons.timestamps[photons.timestamps < cut],
                       duration=cut)
    c = estimate_g2(head, head, bin_ns=0.5, max_lag_ns=46.0)
    spec = fourier_spectrum(c, n_harmonics=2, min_peak_snr=2.0, min_freq=0.3)
    init = HarmonicG2Params(decay_rate=0.08, omega=spec.fundamental,
                            harmonics=((-spec.harmonic_amps[0], 0.0),
                                       (0.02, 0.0), (0.02, 0.0)),
                            check_domain=(0.0, 1.0))
    rep = fit_g2(c, 3, init)
    g2p = g2_params_from_report(rep)
    envelope = 1.0 / rep.params["decay_rate"]

    results = {}
    for tag, delta in (("small", presets.DISCRIMINATION_DELTA),
                       ("large", 290.0)):
        cfg = AcquisitionConfig(split_ratios=presets.DISCRIMINATION_SPLITS,
                                delay_delta=delta, gate_width=8.0,
                                tac_range=presets.DISCRIMINATION_TAC_RANGE,
                                tac_bin=2.0)
        d1, d2, d3 = route(photons, cfg, seed=77)
        h = tac_acquire(d1, d2, d3, cfg)
        slc = normalize_g3(h, (d1.rate_per_ns, d2.rate_per_ns, d3.rate_per_ns))
        results[tag] = discriminate(slc, g2p,
                                    delta_range=(max(2.0, delta - 8), delta + 12))
    return envelope, results


@pytest.fixture(scope="module")
def classical_discrimination():
    diffusion = 0.02                       # envelope time 50 ns
    p = MultimodeParams(n_modes=1, total_intensity=0.12, mod_depth=0.8,
                        omega=OMEGA, phase_diffusion=diffusion, seed=7001)
    trace = multimode_intensity(p, 6.0e6, dt=0.5)
    s = sample_cox(trace, seed=7001)
    c = estimate_g2(s, s, bin_ns=0.5, max_lag_ns=60.0)
    init = HarmonicG2Params(decay_rate=diffusion, omega=OMEGA,
                            harmonics=((0.3, 0.0),), check_domain=(0.0, 1.0))
    rep = fit_g2(c, 1, init)
    g2p = g2_params_from_report(rep)

    results = {}
    for tag, delta in (("small", 50.0), ("large", 500.0)):
        cfg = AcquisitionConfig(split_ratios=(0.45, 0.99), delay_delta=delta,
                                gate_width=8.0, tac_range=75.0, tac_bin=2.5)
        d1, d2, d3 = route(s, cfg, seed=79)
        h = tac_acquire(d1, d2, d3, cfg)
        slc = normalize_g3(h, (d1.rate_per_ns, d2.rate_per_ns, d3.rate_per_ns))
        results[tag] = discriminate(slc, g2p,
                                    delta_range=(max(0.0, delta - 20), delta + 20))
    return results


def test_criterion_6_large_delay_agreement(quantum_discrimination,
                                           classical_discrimination):
    envelope, q = quantum_discrimination
    cl = classical_discrimination
    rq = q["large"].ratio
    rc = cl["large"].ratio
    ok = 0.9 <= rq <= 1.1 and 0.9 <= rc <= 1.1
    report(6, ok, f"large-delay residual ratios: quantum {rq:.3f}, classical {rc:.3f} "
                  f"(quantum delay 290 ns >= 10 envelope times of {envelope:.1f} ns)")


def test_criterion_7_discrimination(quantum_discrimination, classical_discrimination):
    _, q = quantum_discrimination
    cl = classical_discrimination
    q_small = q["small"]
    ok = (q_small.preferred is G3Model.QUANTUM and q_small.ratio > 1.5
          and cl["small"].ratio <= 1.1 and cl["large"].ratio <= 1.1)
    report(7, ok, f"discrimination: quantum source ratio {q_small.ratio:.2f} "
                  f"(prefers {q_small.preferred.value}); classical ratios "
                  f"{cl['small'].ratio:.3f}/{cl['large'].ratio:.3f} never favor the "
                  f"quantum form beyond 1.1")


# --------------------------------------------------------------------------
# criterion 8: gated acquisition consistent with the direct map
# --------------------------------------------------------------------------

def test_criterion_8_tac_consistency():
    cfg = AcquisitionConfig(split_ratios=(0.5, 0.5), delay_delta=25.0,
                            gate_width=8.0, tac_range=30.0, tac_bin=2.0)
    d1 = poisson_stream(0.06, 8.0e6, seed=8001, channel=0)
    d2 = poisson_stream(0.06, 8.0e6, seed=8002, channel=1)
    d3 = poisson_stream(0.0015, 8.0e6, seed=8003, channel=2)
    h = tac_acquire(d1, d2, d3, cfg)
    slc = normalize_g3(h, (d1.rate_per_ns, d2.rate_per_ns, d3.rate_per_ns))
    m = estimate_g3_map(d1, d2, d3, bins=(cfg.gate_width, cfg.tac_bin),
                        ranges=((cfg.delay_delta, cfg.delay_delta + cfg.gate_width),
                                (-30.0, 30.0)))
    row = m.row(0)
    sel = np.isin(np.round(row.lag_grid, 6), np.round(slc.lag_grid, 6))
    worst = float(np.max(np.abs((slc.values - row.values[sel])
                                / np.hypot(slc.stderr, row.stderr[sel]))))

    # hand-traced fixture reproduced exactly
    fix_cfg = AcquisitionConfig(delay_delta=50.0, gate_width=8.0,
                                tac_range=20.0, tac_bin=1.0)
    f1 = stream_from_ns([0.0, 60.0], 1000.0, channel=0)
    f2 = stream_from_ns([30.0, 52.0], 1000.0, channel=1)
    f3 = stream_from_ns([57.0, 400.0], 1000.0, channel=2)
    fh = tac_acquire(f1, f2, f3, fix_cfg)
    fixture_ok = (fh.n_starts == 1 and int(fh.counts.sum()) == 1
                  and fh.counts[int(np.flatnonzero(np.isclose(fh.tau_grid, 5.0))[0])] == 1)

    ok = worst < 3.0 and fixture_ok
    report(8, ok, f"gated acquisition vs direct map: worst pull {worst:.2f} sigma "
                  f"({h.n_starts} starts); hand-traced fixture exact: {fixture_ok}")


# --------------------------------------------------------------------------
# criterion 9: pump sweep returns the inverse-square-root exponent
# --------------------------------------------------------------------------

def test_criterion_9_pump_sweep():
    pairs = []
    for j in np.linspace(2.0, 6.0, 9):
        p = presets.sweep_params(float(j))
        h = build_hamiltonian(p)
        ss = steady_state(h, p)
        guess = 2.0 * np.pi / (np.sqrt(2.0) * p.drive_eps)
        tau = np.linspace(0.0, 30.0 * guess, 8192)
        curve = g2_from_steady_state(h, ss, tau, p)
        spec = fourier_spectrum(correlogram_from_curve(tau, curve.values),
                                min_peak_snr=1.5, min_freq=4.0 * p.kappa)
        pairs.append((float(j), 2.0 * np.pi / spec.fundamental))
    swept = fit_inverse_sqrt(pairs, fit_j0=True)
    p_swept = swept.params["p"]

    j = np.linspace(1.2, 9.0, 12)
    exact = fit_inverse_sqrt([(float(x), float(10.0 * x ** -0.5)) for x in j])
    ok = (0.4 <= p_swept <= 0.6
          and abs(exact.params["p"] - 0.5) < 1e-6
          and abs(exact.params["a"] - 10.0) < 1e-6)
    report(9, ok, f"pump sweep exponent p = {p_swept:.4f} +- {swept.stderr['p']:.4f}; "
                  f"noiseless synthetic recovery p = {exact.params['p']:.7f}")


# --------------------------------------------------------------------------
# criterion 10: bit-identical reruns
# --------------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path):
    cfg_text = """
[laser]
n_modes = 2
omega = 0.5
mod_depth = 0.9
diffusion = 0.005
total_intensity = 0.4

[quantum]
coupling_g = 1.0
kappa = 0.12
gamma_b = 0.02
detuning_a = 1.0
detuning_b = 1.0
drive_eps = 0.35
n_max = 2

[detection]
delay_delta = 15.0
tac_range = 25.0
split_bs1 = 0.4
split_bs2 = 0.9

[run]
seed = 246810
duration = 2.0e5
"""
    cfg_path = tmp_path / "det.toml"
    cfg_path.write_text(cfg_text)

    def one_pass(tag):
        pts = tmp_path / f"{tag}_sim.pts1"
        routed = tmp_path / f"{tag}_routed.pts1"
        slc = tmp_path / f"{tag}_slice.csv"
        qpts = tmp_path / f"{tag}_quantum.pts1"
        assert cli_main(["simulate", "--model", "classical",
                         "--config", str(cfg_path), "--out", str(pts)]) == 0
        assert cli_main(["route", "--config", str(cfg_path),
                         "--out", str(routed), str(pts)]) == 0
        assert cli_main(["tac", "--config", str(cfg_path),
                         "--out", str(slc), str(routed)]) == 0
        assert cli_main(["simulate", "--model", "quantum",
                         "--config", str(cfg_path), "--out", str(qpts)]) == 0
        return (pts.read_bytes(), routed.read_bytes(),
                slc.read_bytes(), qpts.read_bytes())

    first = one_pass("a")
    second = one_pass("b")
    ok = all(x == y for x, y in zip(first, second))
    report(10, ok, "pipeline reruns byte-identical across PTS1 and CSV artifacts")

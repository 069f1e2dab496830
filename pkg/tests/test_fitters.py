import numpy as np
import pytest

from photonstat.corrmodel import (G3Model, G3Prediction, HarmonicG2Params,
                                  classical_g3, eval_g2, quantum_g3)
from photonstat.errors import BadInit, DomainError
from photonstat.estimators import Correlogram, estimate_g2
from photonstat.fitters import (discriminate, fit_g2, fit_g3_delta,
                                fit_inverse_sqrt, g2_params_from_report)
from photonstat.photonsim import MultimodeParams, multimode_intensity, sample_cox

TRUTH = HarmonicG2Params(decay_rate=0.02, omega=0.5,
                         harmonics=((0.45, 0.0), (0.15, 0.0)))


def synth_correlogram(g2, sigma, seed, span=120.0, bin_ns=0.5, noisy=True):
    rng = np.random.Generator(np.random.PCG64(seed))
    lags = np.arange(-span, span + bin_ns / 2, bin_ns)
    vals = eval_g2(g2, lags)
    if noisy:
        vals = vals + rng.normal(0.0, sigma, lags.size)
    return Correlogram(lag_grid=lags, values=vals,
                       stderr=np.full(lags.size, sigma),
                       counts=np.zeros(lags.size, dtype=np.int64), total_pairs=0)


def synth_g3_slice(g2, kind, delta, sigma, seed, span=320.0, bin_ns=2.0, noisy=True):
    rng = np.random.Generator(np.random.PCG64(seed))
    lags = np.arange(-span, span / 8 + bin_ns / 2, bin_ns)
    pred = G3Prediction(kind, delta, g2)
    vals = (classical_g3 if kind is G3Model.CLASSICAL else quantum_g3)(pred, lags)
    if noisy:
        vals = vals + rng.normal(0.0, sigma, lags.size)
    return Correlogram(lag_grid=lags, values=vals,
                       stderr=np.full(lags.size, sigma),
                       counts=np.zeros(lags.size, dtype=np.int64), total_pairs=0)


class TestFitG2:
    def test_recovery_with_one_percent_noise(self):
        c = synth_correlogram(TRUTH, sigma=0.01, seed=101)
        rep = fit_g2(c, 2, TRUTH)
        assert rep.converged
        truth = {"decay_rate": 0.02, "omega": 0.5, "a1": 0.45, "a2": 0.15}
        for name, val in truth.items():
            err = max(rep.stderr[name], 1e-9)
            assert abs(rep.params[name] - val) < 3 * err, name

    def test_flat_data_gives_zero_amplitudes(self):
        flat = HarmonicG2Params(decay_rate=0.01, omega=0.5,
                                harmonics=((0.0, 0.0), (0.0, 0.0)))
        c = synth_correlogram(flat, sigma=0.01, seed=102)
        init = HarmonicG2Params(decay_rate=0.01, omega=0.5,
                                harmonics=((0.05, 0.0), (0.05, 0.0)),
                                check_domain=(0.0, 1.0))
        rep = fit_g2(c, 2, init)
        for name in ("a1", "a2"):
            assert abs(rep.params[name]) < 3 * max(rep.stderr[name], 1e-4)

    def test_bad_init_rejected(self):
        c = synth_correlogram(TRUTH, sigma=0.01, seed=103)
        wrong_k = HarmonicG2Params(decay_rate=0.02, omega=0.5, harmonics=((0.4, 0.0),))
        with pytest.raises(BadInit):
            fit_g2(c, 2, wrong_k)

    def test_stderr_must_be_positive(self):
        c = synth_correlogram(TRUTH, sigma=0.01, seed=104)
        c.stderr[3] = 0.0
        with pytest.raises(DomainError):
            fit_g2(c, 2, TRUTH)

    def test_omega_recovered_from_sampled_stream(self):
        omega = 0.5
        p = MultimodeParams(n_modes=1, total_intensity=0.4, mod_depth=1.0,
                            omega=omega, phase_diffusion=0.01, seed=105)
        tr = multimode_intensity(p, 2.0e6, dt=0.25)
        s = sample_cox(tr, seed=105)
        c = estimate_g2(s, s, bin_ns=0.5, max_lag_ns=80.0)
        rep = fit_g2(c, 1)   # spectrum-seeded default init
        assert rep.converged
        assert abs(rep.params["omega"] - omega) / omega < 0.01


class TestFitG3Delta:
    def test_noiseless_recovery_to_polish_tolerance(self):
        for kind in (G3Model.CLASSICAL, G3Model.QUANTUM):
            c = synth_g3_slice(TRUTH, kind, delta=100.0, sigma=0.01,
                               seed=1, noisy=False)
            rep = fit_g3_delta(c, TRUTH, kind, delta_range=(60.0, 140.0))
            assert rep.converged
            assert abs(rep.params["delta"] - 100.0) < 1e-3

    def test_long_delay_recovery(self):
        c = synth_g3_slice(TRUTH, G3Model.CLASSICAL, delta=265.0, sigma=0.02, seed=2)
        rep = fit_g3_delta(c, TRUTH, G3Model.CLASSICAL, delta_range=(180.0, 320.0))
        assert rep.converged
        assert abs(rep.params["delta"] - 265.0) < 2.0

    def test_short_delay_recovery_quantum(self):
        c = synth_g3_slice(TRUTH, G3Model.QUANTUM, delta=75.0, sigma=0.02, seed=3,
                           span=200.0)
        rep = fit_g3_delta(c, TRUTH, G3Model.QUANTUM, delta_range=(20.0, 140.0))
        assert rep.converged
        assert abs(rep.params["delta"] - 75.0) < 2.0

    def test_flat_slice_unidentifiable(self):
        # a flat slice comes with a near-flat fitted pair correlation; the
        # delay then moves the residual by less than the chi-square noise
        rng = np.random.Generator(np.random.PCG64(4))
        lags = np.arange(-120.0, 40.0, 2.0)
        c = Correlogram(lag_grid=lags,
                        values=1.0 + rng.normal(0, 0.02, lags.size),
                        stderr=np.full(lags.size, 0.02),
                        counts=np.zeros(lags.size, dtype=np.int64), total_pairs=0)
        near_flat = HarmonicG2Params(decay_rate=0.02, omega=0.5,
                                     harmonics=((1e-4, 0.0), (1e-4, 0.0)))
        rep = fit_g3_delta(c, near_flat, G3Model.CLASSICAL, delta_range=(0.0, 100.0))
        assert not rep.converged

    def test_error_weighting_contract(self):
        # scaling all error bars by c scales the weighted residual sum by
        # exactly 1/c^2 and leaves the fitted delay untouched
        c = synth_g3_slice(TRUTH, G3Model.CLASSICAL, delta=80.0, sigma=0.02, seed=5)
        rep1 = fit_g3_delta(c, TRUTH, G3Model.CLASSICAL, delta_range=(40.0, 120.0))
        scaled = Correlogram(lag_grid=c.lag_grid, values=c.values,
                             stderr=7.0 * c.stderr, counts=c.counts, total_pairs=0)
        rep2 = fit_g3_delta(scaled, TRUTH, G3Model.CLASSICAL, delta_range=(40.0, 120.0))
        assert rep2.residual_ss == pytest.approx(rep1.residual_ss / 49.0, rel=1e-6)
        assert rep2.params["delta"] == pytest.approx(rep1.params["delta"], abs=1e-6)


class TestDiscriminate:
    def test_prefers_generating_model(self):
        delta = 60.0
        for kind in (G3Model.CLASSICAL, G3Model.QUANTUM):
            c = synth_g3_slice(TRUTH, kind, delta=delta, sigma=0.01, seed=6,
                               span=200.0)
            rep = discriminate(c, TRUTH, delta_range=(20.0, 120.0))
            assert rep.preferred is kind
            if kind is G3Model.QUANTUM:
                assert rep.ratio > 1.5
            else:
                assert rep.ratio < 1.0 / 1.5

    def test_ratio_definition(self):
        c = synth_g3_slice(TRUTH, G3Model.QUANTUM, delta=60.0, sigma=0.02, seed=7,
                           span=200.0)
        rep = discriminate(c, TRUTH, delta_range=(20.0, 120.0))
        assert rep.ratio == pytest.approx(
            rep.fit_classical.residual_ss / rep.fit_quantum.residual_ss, rel=1e-12)


class TestFitInverseSqrt:
    def test_exact_recovery(self):
        j = np.linspace(1.2, 9.0, 12)
        pairs = [(float(x), float(10.0 * x ** -0.5)) for x in j]
        rep = fit_inverse_sqrt(pairs)
        assert rep.converged
        assert abs(rep.params["p"] - 0.5) < 1e-6
        assert rep.params["a"] == pytest.approx(10.0, rel=1e-9)

    def test_noise_monte_carlo(self):
        # multiplicative 5% noise over 100 draws keeps the exponent pinned
        j = np.geomspace(1.2, 10.0, 30)
        truth = 10.0 * j ** -0.5
        rng = np.random.Generator(np.random.PCG64(8))
        ps = []
        for _ in range(100):
            noisy = truth * (1.0 + rng.normal(0.0, 0.05, j.size))
            rep = fit_inverse_sqrt(list(zip(j, noisy)))
            ps.append(rep.params["p"])
        ps = np.array(ps)
        assert np.all(np.abs(ps - 0.5) < 0.05)
        assert abs(ps.mean() - 0.5) < 0.01

    def test_free_offset_recovers_shifted_law(self):
        j = np.linspace(1.5, 6.0, 10)
        pairs = [(float(x), float(4.0 * (x - 1.0) ** -0.5)) for x in j]
        rep = fit_inverse_sqrt(pairs, fit_j0=True)
        assert abs(rep.params["p"] - 0.5) < 1e-4
        assert abs(rep.params["j0"] - 1.0) < 1e-3

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            fit_inverse_sqrt([(2.0, 5.0), (3.0, 4.0)])   # too few points
        with pytest.raises(DomainError):
            fit_inverse_sqrt([(-1.0, 5.0), (2.0, 4.0), (3.0, 3.0)])

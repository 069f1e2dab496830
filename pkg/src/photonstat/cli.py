"""Command-line front end tying the pipeline together.

Subcommands map one-to-one onto pipeline stages: simulate a source, route
it through the detector chain, acquire gated start-stop histograms,
estimate correlators and spectra, fit models, and discriminate between the
classical and quantum third-order predictions.  Every artifact embeds the
configuration hash and seed, and reruns with the same configuration are
byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio, presets
from .corrmodel import G3Model, HarmonicG2Params, eval_g2, visibility
from .detection import normalize_g3, route, tac_acquire
from .errors import ParseError, PeakNotFound, PhotonStatError, ValidationError
from .estimators import (correlogram_from_curve, estimate_cross_g2, estimate_g2,
                         estimate_g3_map, fourier_spectrum)
from .events import merge
from .fitters import discriminate, fit_g2, fit_g3_delta, fit_inverse_sqrt, g2_params_from_report
from .photonsim import multimode_intensity, quantum_trajectory, sample_cox
from .qdynamics import build_hamiltonian, g2_from_steady_state, steady_state
from .runconfig import RunConfig, parse_config


def worker_count() -> int:
    """Worker cap: min(cpu count, PHOTONSTAT_THREADS if set)."""
    n = os.cpu_count() or 1
    cap = os.environ.get("PHOTONSTAT_THREADS")
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n


def _load_config(args) -> RunConfig:
    if args.config:
        cfg = parse_config(args.config)
    else:
        cfg = parse_config_text_default()
    if args.seed is not None:
        resolved = {k: dict(v) for k, v in cfg.resolved.items()}
        resolved["run"]["seed"] = args.seed
        from .runconfig import config_from_dict
        cfg = config_from_dict(resolved)
    return cfg


def parse_config_text_default() -> RunConfig:
    from .runconfig import config_from_dict
    return config_from_dict({})


def _meta(cfg: RunConfig, extra=None) -> dict:
    meta = {"config_hash": cfg.hash, "seed": cfg.run.seed}
    meta.update(extra or {})
    return meta


def _out_path(args, default_name: str) -> str:
    if args.out:
        return args.out
    return default_name


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    seed = cfg.run.seed
    duration = cfg.run.duration
    if args.model == "classical":
        laser = cfg.laser
        dt = 2.0 * np.pi / laser.omega / 40.0
        trace = multimode_intensity(laser, duration, dt)
        streams = [sample_cox(trace, seed, modes=[k], channel=k)
                   for k in range(laser.n_modes)]
    else:
        photons, excitations = quantum_trajectory(cfg.quantum, duration, seed)
        streams = [photons, excitations]
    path = _out_path(args, f"{args.model}.pts1")
    fileio.write_pts1(path, streams)
    print(f"wrote {path}: {len(streams)} channels, "
          f"{sum(len(s) for s in streams)} events, seed {seed}")
    return 0


def _read_streams(args, cfg: RunConfig):
    duration_ticks = int(round(cfg.run.duration * 1000.0))
    return fileio.read_pts1(args.infile, duration_ticks=duration_ticks)


def _pick_channels(streams: dict, spec: str):
    picked = []
    for token in spec.split(","):
        ch = int(token)
        if ch not in streams:
            raise ValidationError(f"channel {ch} not present in the input file")
        picked.append(streams[ch])
    return picked


def cmd_route(args) -> int:
    cfg = _load_config(args)
    streams = _read_streams(args, cfg)
    source = merge([streams[int(t)] for t in args.channels.split(",")]) \
        if args.channels else merge(list(streams.values()))
    d1, d2, d3 = route(source, cfg.detection, cfg.run.seed)
    path = _out_path(args, "routed.pts1")
    fileio.write_pts1(path, [d1, d2, d3])
    print(f"wrote {path}: rates {d1.rate_per_ns:.5f}/{d2.rate_per_ns:.5f}/"
          f"{d3.rate_per_ns:.5f} counts/ns")
    return 0


def cmd_tac(args) -> int:
    cfg = _load_config(args)
    streams = _read_streams(args, cfg)
    d1, d2, d3 = (streams[0], streams[1], streams[2])
    det = cfg.detection
    if args.delta is not None:
        from dataclasses import replace
        det = replace(det, delay_delta=args.delta)
    h = tac_acquire(d1, d2, d3, det)
    slc = normalize_g3(h, (d1.rate_per_ns, d2.rate_per_ns, d3.rate_per_ns))
    path = _out_path(args, "g3_slice.csv")
    fileio.write_correlogram_csv(path, slc, _meta(cfg))
    print(f"wrote {path}: {h.n_starts} starts, {int(h.counts.sum())} stops, "
          f"effective delta {h.effective_delta:.2f} ns")
    return 0


def _g2_command(args, cross: bool) -> int:
    cfg = _load_config(args)
    streams = _read_streams(args, cfg)
    picked = _pick_channels(streams, args.channels)
    if len(picked) == 1:
        s_a = s_b = picked[0]
    elif len(picked) == 2:
        s_a, s_b = picked
    else:
        raise ValidationError("need one or two channels")
    fn = estimate_cross_g2 if cross else estimate_g2
    c = fn(s_a, s_b, cfg.acquisition.bin, cfg.acquisition.max_lag)
    path = _out_path(args, "cross_g2.csv" if cross else "g2.csv")
    fileio.write_correlogram_csv(path, c, _meta(cfg))
    print(f"wrote {path}: {c.total_pairs} pairs over {c.lag_grid.size} bins")
    return 0


def cmd_g2(args) -> int:
    return _g2_command(args, cross=False)


def cmd_xg2(args) -> int:
    return _g2_command(args, cross=True)


def cmd_g3map(args) -> int:
    cfg = _load_config(args)
    streams = _read_streams(args, cfg)
    s1, s2, s3 = _pick_channels(streams, args.channels)
    acq = cfg.acquisition
    d_lo, d_hi = (float(x) for x in args.delta_range.split(":"))
    m = estimate_g3_map(s1, s2, s3, bins=(args.delta_bin, acq.bin),
                        ranges=((d_lo, d_hi), (-acq.max_lag, acq.max_lag)))
    path = _out_path(args, "g3map.csv")
    fileio.write_g3map_csv(path, m, _meta(cfg))
    print(f"wrote {path}: {m.values.shape[0]} x {m.values.shape[1]} bins")
    return 0


def cmd_spectrum(args) -> int:
    cfg = _load_config(args)
    c = fileio.read_correlogram_csv(args.infile)
    path = _out_path(args, "spectrum.csv")
    try:
        spec = fourier_spectrum(c, n_harmonics=args.harmonics,
                                min_freq=args.min_freq)
    except PeakNotFound:
        fileio.write_report(path, {"fundamental": "not found"}, _meta(cfg))
        print(f"wrote {path}: fundamental not found (flat correlogram)")
        return 0
    pairs = {"fundamental_rad_per_ns": spec.fundamental,
             "period_ns": 2.0 * np.pi / spec.fundamental}
    for k, a in enumerate(spec.harmonic_amps, start=1):
        pairs[f"harmonic_{k}"] = float(a)
    fileio.write_report(path, pairs, _meta(cfg))
    print(f"wrote {path}: fundamental {spec.fundamental:.4f} rad/ns")
    return 0


def cmd_visibility(args) -> int:
    cfg = _load_config(args)
    c = fileio.read_correlogram_csv(args.infile)
    lo, hi = (float(x) for x in args.window.split(":"))
    res = visibility(c, (lo, hi))
    path = _out_path(args, "visibility.csv")
    fileio.write_report(path, {"v": res.v, "g2_max": res.g2_max, "g2_min": res.g2_min,
                               "window_lo": lo, "window_hi": hi}, _meta(cfg))
    print(f"wrote {path}: V = {res.v:.4f}")
    return 0


def _g2_params_from_file(path: str) -> HarmonicG2Params:
    rep = fileio.read_report(path)
    k = int(rep["k_harmonics"])
    harmonics = tuple((float(rep[f"a{i}"]), float(rep[f"phi{i}"])) for i in range(1, k + 1))
    return HarmonicG2Params(decay_rate=float(rep["decay_rate"]), omega=float(rep["omega"]),
                            harmonics=harmonics, check_domain=(0.0, 1.0))


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    c = fileio.read_correlogram_csv(args.infile)
    path = _out_path(args, "fit.txt")
    if args.what == "g2":
        rep = fit_g2(c, args.harmonics)
        pairs = {"k_harmonics": args.harmonics}
        pairs.update(rep.params)
        pairs.update({f"stderr_{k}": v for k, v in rep.stderr.items()})
        pairs.update({"residual_ss": rep.residual_ss, "dof": rep.dof,
                      "converged": rep.converged, "n_iter": rep.n_iter})
        fileio.write_report(path, pairs, _meta(cfg))
        model = eval_g2(g2_params_from_report(rep), c.lag_grid)
    else:
        g2p = _g2_params_from_file(args.g2_params)
        kind = G3Model.CLASSICAL if args.kind == "classical" else G3Model.QUANTUM
        rep = fit_g3_delta(c, g2p, kind)
        pairs = dict(rep.params)
        pairs.update({f"stderr_{k}": v for k, v in rep.stderr.items()})
        pairs.update({"residual_ss": rep.residual_ss, "dof": rep.dof,
                      "converged": rep.converged, "kind": args.kind})
        fileio.write_report(path, pairs, _meta(cfg))
        from .corrmodel import G3Prediction, classical_g3, quantum_g3
        pred = G3Prediction(kind, rep.params["delta"], g2p)
        model = (classical_g3 if kind is G3Model.CLASSICAL else quantum_g3)(pred, c.lag_grid)
    curve_path = os.path.splitext(path)[0] + "_curve.csv"
    fileio.write_correlogram_csv(
        curve_path, correlogram_from_curve(c.lag_grid, model), _meta(cfg))
    print(f"wrote {path} and {curve_path}; converged = {rep.converged}")
    return 0


def cmd_discriminate(args) -> int:
    cfg = _load_config(args)
    c = fileio.read_correlogram_csv(args.infile)
    g2p = _g2_params_from_file(args.g2_params)
    rep = discriminate(c, g2p)
    path = _out_path(args, "discrimination.txt")
    fileio.write_report(path, {
        "preferred": rep.preferred.value,
        "ratio": rep.ratio,
        "classical_delta": rep.fit_classical.params["delta"],
        "classical_residual_ss": rep.fit_classical.residual_ss,
        "quantum_delta": rep.fit_quantum.params["delta"],
        "quantum_residual_ss": rep.fit_quantum.residual_ss,
        "dof": rep.fit_quantum.dof,
    }, _meta(cfg))
    print(f"wrote {path}: preferred = {rep.preferred.value}, ratio = {rep.ratio:.3f}")
    return 0


def cmd_sweep_pump(args) -> int:
    cfg = _load_config(args)
    js = np.linspace(args.j_min, args.j_max, args.points)

    def period_at(j: float) -> float:
        p = presets.sweep_params(float(j))
        h = build_hamiltonian(p)
        ss = steady_state(h, p)
        guess = 2.0 * np.pi / (np.sqrt(2.0) * p.drive_eps)
        tau = np.linspace(0.0, 30.0 * guess, 8192)
        curve = g2_from_steady_state(h, ss, tau, p)
        spec = fourier_spectrum(correlogram_from_curve(curve.tau_grid, curve.values),
                                min_peak_snr=1.5, min_freq=4.0 * p.kappa)
        return 2.0 * np.pi / spec.fundamental

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        periods = list(pool.map(period_at, js))
    pairs = list(zip(js, periods))
    rep = fit_inverse_sqrt(pairs, fit_j0=True)
    path = _out_path(args, "pump_sweep.csv")
    rows = "\n".join(f"{fileio.FLOAT_FMT % j},{fileio.FLOAT_FMT % t}" for j, t in pairs)
    meta = _meta(cfg, {"p": rep.params["p"], "p_stderr": rep.stderr["p"],
                       "a": rep.params["a"], "j0": rep.params["j0"]})
    fileio.atomic_write_text(path, fileio.meta_lines(meta)
                             + "\nj_norm,period_ns\n" + rows + "\n")
    print(f"wrote {path}: exponent p = {rep.params['p']:.4f} +- {rep.stderr['p']:.4f}")
    return 0


def cmd_demo(args) -> int:
    """Full pipeline: quantum stream -> chain -> slices at two delays -> verdicts."""
    cfg = _load_config(args)
    out_dir = args.out or cfg.run.out_dir
    os.makedirs(out_dir, exist_ok=True)

    def path(name):
        return os.path.join(out_dir, name)

    seed = cfg.run.seed
    print("simulating quantum-jump stream ...")
    photons, _ = quantum_trajectory(cfg.quantum, cfg.run.duration, seed)
    print(f"  {len(photons)} photons at {photons.rate_per_ns:.4f} counts/ns")

    c2 = estimate_g2(photons, photons, cfg.acquisition.bin / 2.0, cfg.acquisition.max_lag)
    fileio.write_correlogram_csv(path("g2.csv"), c2, _meta(cfg))
    spec = fourier_spectrum(c2, n_harmonics=2, min_peak_snr=2.0, min_freq=0.3)
    init = HarmonicG2Params(decay_rate=0.08, omega=spec.fundamental,
                            harmonics=((-spec.harmonic_amps[0], 0.0), (0.02, 0.0), (0.02, 0.0)),
                            check_domain=(0.0, 1.0))
    repg2 = fit_g2(c2, 3, init)
    g2p = g2_params_from_report(repg2)
    print(f"  g2 fit: omega {repg2.params['omega']:.3f} rad/ns, converged {repg2.converged}")

    from dataclasses import replace
    for tag, delta in (("small", cfg.detection.delay_delta),
                       ("large", 10.0 * cfg.detection.delay_delta + 20.0)):
        det = replace(cfg.detection, delay_delta=delta)
        d1, d2, d3 = route(photons, det, seed)
        h = tac_acquire(d1, d2, d3, det)
        slc = normalize_g3(h, (d1.rate_per_ns, d2.rate_per_ns, d3.rate_per_ns))
        fileio.write_correlogram_csv(path(f"g3_{tag}.csv"), slc,
                                     _meta(cfg, {"delta": delta}))
        rep = discriminate(slc, g2p)
        fileio.write_report(path(f"discrimination_{tag}.txt"), {
            "delta": delta, "preferred": rep.preferred.value, "ratio": rep.ratio,
            "classical_residual_ss": rep.fit_classical.residual_ss,
            "quantum_residual_ss": rep.fit_quantum.residual_ss,
        }, _meta(cfg))
        print(f"  delta {delta:.0f} ns: preferred {rep.preferred.value}, "
              f"ratio {rep.ratio:.3f}")
    print(f"artifacts in {out_dir}/")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="photonstat",
                                 description="photon-stream simulation and correlation analysis")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, infile=False):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--out", help="output path")
        if infile:
            p.add_argument("infile", help="input file")

    p = sub.add_parser("simulate", help="generate a photon stream (PTS1)")
    p.add_argument("--model", choices=["classical", "quantum"], required=True)
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("route", help="split a stream over the three detectors")
    p.add_argument("--channels", help="comma-separated source channels to merge")
    common(p, infile=True)
    p.set_defaults(fn=cmd_route)

    p = sub.add_parser("tac", help="gated start-stop acquisition -> g3 slice CSV")
    p.add_argument("--delta", type=float, help="override detection.delay_delta (ns)")
    common(p, infile=True)
    p.set_defaults(fn=cmd_tac)

    p = sub.add_parser("g2", help="pair correlation of one or two channels")
    p.add_argument("--channels", default="0", help="e.g. 0 or 1,2")
    common(p, infile=True)
    p.set_defaults(fn=cmd_g2)

    p = sub.add_parser("xg2", help="cross correlation of two channels")
    p.add_argument("--channels", required=True, help="e.g. 0,3")
    common(p, infile=True)
    p.set_defaults(fn=cmd_xg2)

    p = sub.add_parser("g3map", help="two-dimensional triple-coincidence map")
    p.add_argument("--channels", default="0,1,2")
    p.add_argument("--delta-range", default="0:64", help="lo:hi in ns")
    p.add_argument("--delta-bin", type=float, default=8.0)
    common(p, infile=True)
    p.set_defaults(fn=cmd_g3map)

    p = sub.add_parser("spectrum", help="harmonic analysis of a correlogram CSV")
    p.add_argument("--harmonics", type=int, default=3)
    p.add_argument("--min-freq", type=float, default=None)
    common(p, infile=True)
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("visibility", help="oscillation contrast inside a window")
    p.add_argument("--window", required=True, help="lo:hi in ns")
    common(p, infile=True)
    p.set_defaults(fn=cmd_visibility)

    p = sub.add_parser("fit", help="fit g2 family or a third-order slice")
    p.add_argument("--what", choices=["g2", "g3"], required=True)
    p.add_argument("--harmonics", type=int, default=2)
    p.add_argument("--kind", choices=["classical", "quantum"], default="classical")
    p.add_argument("--g2-params", help="fit report file with frozen g2 parameters")
    common(p, infile=True)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("discriminate", help="classical-vs-quantum verdict on a slice")
    p.add_argument("--g2-params", required=True)
    common(p, infile=True)
    p.set_defaults(fn=cmd_discriminate)

    p = sub.add_parser("sweep-pump", help="oscillation period vs pump with power-law fit")
    p.add_argument("--j-min", type=float, default=2.0)
    p.add_argument("--j-max", type=float, default=6.0)
    p.add_argument("--points", type=int, default=9)
    common(p)
    p.set_defaults(fn=cmd_sweep_pump)

    p = sub.add_parser("demo", help="full small-vs-large delay discrimination run")
    common(p)
    p.set_defaults(fn=cmd_demo)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PhotonStatError, OSError, ZeroDivisionError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

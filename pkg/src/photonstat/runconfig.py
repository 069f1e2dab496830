"""Run configuration: TOML parsing, validation, canonical hashing.

The file has five sections (laser, quantum, detection, acquisition, run);
every key has a documented default, unknown keys are rejected, and every
violated range names the offending section.key.  The canonical dump of the
resolved configuration (defaults filled in) is what gets hashed into output
file headers, so rerunning an identical configuration reproduces identical
artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass

try:
    import tomllib as _toml
except ModuleNotFoundError:            # Python 3.10
    import tomli as _toml

from . import presets
from .detection import AcquisitionConfig
from .errors import ParseError, ValidationError
from .fileio import FLOAT_FMT, config_hash
from .photonsim import MultimodeParams
from .qdynamics import CavityModelParams


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _fraction(x):
    return 0.0 <= x <= 1.0


def _pos_int(x):
    return isinstance(x, int) and x >= 1


_Q = presets.UNDERDAMPED

# key -> (default, converter, acceptance test, description of the constraint)
_SCHEMA = {
    "laser": {
        "n_modes": (7, int, _pos_int, "integer >= 1"),
        "omega": (0.5, float, _positive, "> 0"),
        "mod_depth": (0.8, float, _fraction, "in [0, 1]"),
        "diffusion": (0.01, float, _nonneg, ">= 0"),
        "total_intensity": (0.2, float, _nonneg, ">= 0"),
    },
    "quantum": {
        "coupling_g": (_Q.coupling_g, float, _nonneg, ">= 0"),
        "kappa": (_Q.kappa, float, _positive, "> 0"),
        "gamma_b": (_Q.gamma_b, float, _nonneg, ">= 0"),
        "detuning_a": (_Q.detuning_a, float, lambda x: True, "any"),
        "detuning_b": (_Q.detuning_b, float, lambda x: True, "any"),
        "drive_eps": (_Q.drive_eps, float, _nonneg, ">= 0"),
        "n_max": (_Q.n_max, int, lambda x: isinstance(x, int) and x >= 2, "integer >= 2"),
    },
    "detection": {
        "split_bs1": (1.0 / 3.0, float, _fraction, "in [0, 1]"),
        "split_bs2": (0.5, float, _fraction, "in [0, 1]"),
        "efficiency": ([1.0, 1.0, 1.0], list,
                       lambda v: len(v) == 3 and all(_fraction(float(e)) for e in v),
                       "three values in [0, 1]"),
        "dead_time": (0.0, float, _nonneg, ">= 0"),
        "dark_rate": (0.0, float, _nonneg, ">= 0"),
        "gate_width": (8.0, float, _positive, "> 0"),
        "delay_delta": (8.0, float, _nonneg, ">= 0"),
        "tac_range": (500.0, float, _positive, "> 0"),
        "jitter_sigma": (0.0, float, _nonneg, ">= 0"),
        "tac_bin": (1.0, float, _positive, "> 0"),
    },
    "acquisition": {
        "bin": (1.0, float, _positive, "> 0"),
        "max_lag": (100.0, float, _positive, "> 0"),
        "tac_range": (500.0, float, _positive, "> 0"),
    },
    "run": {
        "seed": (12345, int, lambda x: isinstance(x, int) and x >= 0, "integer >= 0"),
        "duration": (1.0e6, float, _positive, "> 0 (ns)"),
        "out_dir": ("out", str, lambda x: isinstance(x, str) and len(x) > 0, "nonempty"),
    },
}


@dataclass(frozen=True)
class AcquisitionSettings:
    bin: float
    max_lag: float
    tac_range: float


@dataclass(frozen=True)
class RunSettings:
    seed: int
    duration: float
    out_dir: str


@dataclass(frozen=True)
class RunConfig:
    laser: MultimodeParams
    quantum: CavityModelParams
    detection: AcquisitionConfig
    acquisition: AcquisitionSettings
    run: RunSettings
    resolved: dict       # section -> {key: value} with defaults filled in

    def canonical_text(self) -> str:
        lines = []
        for section in sorted(self.resolved):
            lines.append(f"[{section}]")
            for key in sorted(self.resolved[section]):
                v = self.resolved[section][key]
                if isinstance(v, float):
                    v = FLOAT_FMT % v
                lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    @property
    def hash(self) -> str:
        return config_hash(self.canonical_text())


def _resolve(raw: dict) -> dict:
    for section in raw:
        if section not in _SCHEMA:
            raise ValidationError(f"unknown section [{section}]")
        if not isinstance(raw[section], dict):
            raise ValidationError(f"[{section}] must be a table")
        for key in raw[section]:
            if key not in _SCHEMA[section]:
                raise ValidationError(f"unknown key {section}.{key}")
    resolved = {}
    for section, keys in _SCHEMA.items():
        got = raw.get(section, {})
        resolved[section] = {}
        for key, (default, conv, accept, constraint) in keys.items():
            value = got.get(key, default)
            bad_type = ValidationError(f"{section}.{key}: expected {conv.__name__}")
            if isinstance(value, bool):
                raise bad_type
            if conv is int:
                if not isinstance(value, (int, float)) or int(value) != value:
                    raise bad_type
                value = int(value)
            elif conv is float:
                if not isinstance(value, (int, float)):
                    raise bad_type
                value = float(value)
            elif not isinstance(value, conv):
                raise bad_type
            if not accept(value):
                raise ValidationError(f"{section}.{key} = {value!r}: must be {constraint}")
            resolved[section][key] = value
    return resolved


def config_from_dict(raw: dict) -> RunConfig:
    resolved = _resolve(raw)
    laser = resolved["laser"]
    quantum = resolved["quantum"]
    det = resolved["detection"]
    acq = resolved["acquisition"]
    run = resolved["run"]
    try:
        laser_params = MultimodeParams(
            n_modes=laser["n_modes"], total_intensity=laser["total_intensity"],
            mod_depth=laser["mod_depth"], omega=laser["omega"],
            phase_diffusion=laser["diffusion"], seed=run["seed"])
        quantum_params = CavityModelParams(**quantum)
        det_params = AcquisitionConfig(
            split_ratios=(det["split_bs1"], det["split_bs2"]),
            efficiency=tuple(float(e) for e in det["efficiency"]),
            dead_time=det["dead_time"], dark_rate=det["dark_rate"],
            gate_width=det["gate_width"], delay_delta=det["delay_delta"],
            tac_range=det["tac_range"], jitter_sigma=det["jitter_sigma"],
            tac_bin=det["tac_bin"])
    except Exception as exc:
        raise ValidationError(str(exc)) from exc
    return RunConfig(
        laser=laser_params, quantum=quantum_params, detection=det_params,
        acquisition=AcquisitionSettings(**acq), run=RunSettings(**run),
        resolved=resolved)


def parse_config_text(text: str) -> RunConfig:
    try:
        raw = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ParseError(f"config parse error: {exc}") from exc
    return config_from_dict(raw)


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)

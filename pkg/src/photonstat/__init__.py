"""photonstat: photon timestamp-stream simulation and correlation analysis.

Pipeline: simulate (classical Cox process or quantum-jump trajectories) ->
route through an emulated three-detector chain -> estimate second/third
order correlators -> fit and discriminate the classical product prediction
against the quantum jump-erasure prediction.
"""

from . import errors
from .corrmodel import (G3Model, G3Prediction, HarmonicG2Params, VisibilityResult,
                        classical_g3, eval_g2, quantum_g3, rabi_period, visibility)
from .detection import AcquisitionConfig, TacHistogram, normalize_g3, route, tac_acquire
from .estimators import (Correlogram, G3Map, HarmonicSpectrum, correlogram_from_curve,
                         estimate_cross_g2, estimate_g2, estimate_g3_map, fourier_spectrum)
from .events import EventStream, from_times_ns, merge
from .fitters import (DiscriminationReport, FitReport, discriminate, fit_g2,
                      fit_g3_delta, fit_inverse_sqrt, g2_params_from_report)
from .photonsim import (IntensityTrace, MultimodeParams, multimode_intensity,
                        quantum_trajectory, sample_cox)
from .qdynamics import (CavityModelParams, G2Curve, QuantumState, apply_annihilation,
                        build_hamiltonian, evolve, g2_conditional, g2_from_steady_state,
                        steady_state)
from .runconfig import RunConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig", "CavityModelParams", "Correlogram", "DiscriminationReport",
    "EventStream", "FitReport", "G2Curve", "G3Map", "G3Model", "G3Prediction",
    "HarmonicG2Params", "HarmonicSpectrum", "IntensityTrace", "MultimodeParams",
    "QuantumState", "RunConfig", "TacHistogram", "VisibilityResult",
    "apply_annihilation", "build_hamiltonian", "classical_g3", "correlogram_from_curve",
    "discriminate", "errors", "estimate_cross_g2", "estimate_g2", "estimate_g3_map",
    "eval_g2", "evolve", "fit_g2", "fit_g3_delta", "fit_inverse_sqrt",
    "fourier_spectrum", "from_times_ns", "g2_conditional", "g2_from_steady_state",
    "g2_params_from_report", "merge", "multimode_intensity", "normalize_g3",
    "parse_config", "quantum_g3", "quantum_trajectory", "rabi_period", "route",
    "sample_cox", "steady_state", "tac_acquire", "visibility",
]

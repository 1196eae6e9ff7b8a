"""High-order perturbation of envelopes (HOPE) for biperiodic Maxwell scattering.

Typical use::

    from hope import ScatteringConfig, NumericalParams, TanhSlabGap, HopeProblem, run_hope
    cfg = ScatteringConfig(k0=4.19, d_x=2.0, d_y=2.0, h=1.0, delta=0.1)
    problem = HopeProblem.build(cfg, NumericalParams(16, 16, 32, 12), TanhSlabGap())
    series = run_hope(problem)
    result = scattering_result(series, problem)
"""

__version__ = "0.1.0"

from .boundary import ModeTable, build_mode_table
from .config import NumericalParams, ScatteringConfig, load_config, validate
from .diagnostics import analyticity_report, efficiencies, scattering_result, spatial_decay_probe
from .driver import (HopeProblem, HopeSeries, divergence_invariant, residual_check, run_hope,
                     taylor_sum)
from .envelope import Constant, Tabulated, TanhSlabGap
from .errors import (ConfigError, DivergentSeries, HopeError, InvalidPolarization,
                     NearSingularMode, WoodAnomaly)
from .oracles import three_layer
from .spectral import LateralGrid, VectorField, VerticalGrid

__all__ = [
    "ConfigError", "Constant", "DivergentSeries", "HopeError", "HopeProblem", "HopeSeries",
    "InvalidPolarization", "LateralGrid", "ModeTable", "NearSingularMode", "NumericalParams",
    "ScatteringConfig", "Tabulated", "TanhSlabGap", "VectorField", "VerticalGrid", "WoodAnomaly",
    "analyticity_report", "build_mode_table", "divergence_invariant", "efficiencies",
    "load_config", "residual_check", "run_hope", "scattering_result", "spatial_decay_probe",
    "taylor_sum", "three_layer", "validate",
]

"""Singular solutions of -Delta u - u = Q |u|^{p-1} u: fundamental solutions,
Helmholtz-harmonic profiles, singular convolutions and a Picard solver."""

__version__ = "0.1.0"

from ._kernels import backend_name, set_backend
from .errors import (
    BallExitError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    FitError,
    HelmsingError,
    InconsistentProfileError,
    UnsupportedError,
    ValidationError,
)
from .fundsol import FundamentalSolution, Kind
from .quadrature import KernelEnvelope, PlanarField, RadialProfile, convolve_point, convolve_radial
from .solver import HarmonicPart, ProblemSpec, estimate_kstar, picard_solve, solve_complex, validate_spec

__all__ = [
    "BallExitError", "ConvergenceError", "DivergenceError", "DomainError", "FitError",
    "FundamentalSolution", "HarmonicPart", "HelmsingError", "InconsistentProfileError",
    "KernelEnvelope", "Kind", "PlanarField", "ProblemSpec", "RadialProfile", "UnsupportedError",
    "ValidationError", "backend_name", "convolve_point", "convolve_radial", "estimate_kstar",
    "picard_solve", "set_backend", "solve_complex", "validate_spec",
]

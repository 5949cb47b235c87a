"""Limit theory for Poisson k-flat processes in hyperbolic space.

Submodules: ``special`` (Gamma, sphere areas, quadrature), ``geometry``
(radial kernels and variance integrals), ``limitlaw`` (the limit variable Z,
its cumulants, CF and density), ``simulate`` (Monte Carlo), ``covariance``
(limiting covariance matrices) and ``rates`` (convergence-rate exponents).
"""

from .errors import (
    AdmissibilityError,
    ConsistencyError,
    DomainError,
    HypflatError,
    QuadratureError,
    RegimeError,
)
from .params import DEFAULT_INVERSION, InversionSpec, ModelParams, Regime, admissible_pairs
from .special import DEFAULT_QUAD, QuadSpec

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConsistencyError",
    "DomainError",
    "HypflatError",
    "QuadratureError",
    "RegimeError",
    "InversionSpec",
    "ModelParams",
    "DEFAULT_INVERSION",
    "Regime",
    "admissible_pairs",
    "QuadSpec",
    "DEFAULT_QUAD",
]

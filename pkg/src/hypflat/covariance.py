"""Limiting covariance matrices of the vector (F_r^{(1)}, ..., F_r^{(m)}).

For d = 2k and m = 2 the limit has full rank; when 2k >= d+1 every component
is asymptotically a multiple of the first chaos and the matrix is the outer
product lambda * C C^T with C_a = C(d, k, a).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import AdmissibilityError, RegimeError
from .geometry import A11, C_const
from .limitlaw import y_scale
from .params import ModelParams, Regime
from .special import DEFAULT_QUAD, QuadSpec, _arcosh_from_cm1, _log_sinh, omega, quad_finite

__all__ = [
    "CATALAN",
    "CovMatrix2",
    "j_integral",
    "j_integral_closed_even",
    "sigma_matrix_full",
    "sigma_matrix_rank_one",
    "catalan_check",
    "scaling_regime",
]

CATALAN = 0.9159655941772190
# outer integrand decays like t^2 e^{-t} in t = ln x; the tail past 60 is below 1e-22
_J_T_MAX = 60.0

_SCALINGS = {
    Regime.GAUSSIAN: "e^{r(d-1)}",
    Regime.CRITICAL: "r e^{r(d-1)}",
    Regime.NON_GAUSSIAN: "e^{2r(k-1)}",
}


def scaling_regime(p: ModelParams) -> str:
    """Normalisation under which the covariance of F_r converges."""
    return _SCALINGS[p.regime]


@dataclass
class CovMatrix2:
    """Symmetric PSD covariance limit with its normalisation and rank."""

    entries: np.ndarray
    scaling_regime: str
    rank: int
    error_band: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if not np.allclose(self.entries, self.entries.T, rtol=0, atol=1e-14 * np.abs(self.entries).max()):
            raise ValueError("covariance entries must be symmetric")

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def numerical_rank(self, rel_tol: float = 1e-12) -> int:
        ev = self.eigenvalues()
        return int(np.sum(ev > rel_tol * max(np.trace(self.entries), 0.0)))

    def as_dict(self) -> dict:
        return {
            "entries": self.entries.tolist(),
            "scaling_regime": self.scaling_regime,
            "rank": self.rank,
            "error_band": self.error_band,
            **self.meta,
        }


def _check_d2k(d: int, k: int):
    if d != 2 * k or k < 1:
        raise AdmissibilityError(f"requires d = 2k with k >= 1, got d={d}, k={k}")


def _inner(x: float, k: int, spec: QuadSpec) -> float:
    # int_1^x (y^2-1)^{(k-2)/2} dy, taken in y = cosh u to remove the endpoint singularity
    upper = float(_arcosh_from_cm1(np.array([x - 1.0]))[0])
    if k == 1:
        return quad_finite(lambda u: 1.0, 0.0, upper, spec)

    def f(u):
        if u <= 0.0:
            return 0.0
        return math.exp((k - 1) * float(_log_sinh(u)))

    return quad_finite(f, 0.0, upper, spec)


def j_integral(d: int, k: int, spec: QuadSpec = DEFAULT_QUAD) -> float:
    """J = int_1^inf x^{-d} (int_1^x (y^2-1)^{(k-2)/2} dy)^2 dx by nested quadrature.

    The outer integral runs in t = ln x over [0, 60].
    """
    _check_d2k(d, k)

    @lru_cache(maxsize=None)
    def inner(t):
        return _inner(math.exp(t), k, spec)

    def outer(t):
        if t <= 0.0:
            return 0.0
        val = inner(t)
        if val <= 0.0:
            return 0.0
        return math.exp(2.0 * math.log(val) - (d - 1) * t)

    return quad_finite(outer, 0.0, _J_T_MAX, spec)


def j_integral_closed_even(d: int, k: int) -> Fraction:
    """Exact J for even k, where the inner integral is a polynomial in x."""
    _check_d2k(d, k)
    if k % 2:
        raise AdmissibilityError(f"closed form needs even k, got k={k}")
    j = (k - 2) // 2
    # inner(x) = sum_i binom(j,i) (-1)^{j-i} (x^{2i+1} - 1)/(2i+1)
    poly = {}
    for i in range(j + 1):
        c = Fraction(comb(j, i) * (-1) ** (j - i), 2 * i + 1)
        poly[2 * i + 1] = poly.get(2 * i + 1, 0) + c
        poly[0] = poly.get(0, 0) - c
    total = Fraction(0)
    for a, ca in poly.items():
        for b, cb in poly.items():
            n = a + b
            # int_1^inf x^{n-d} dx = 1/(d-n-1), finite since n <= 2k-2
            total += ca * cb / (d - n - 1)
    return total


def sigma_matrix_full(k: int, spec: QuadSpec = DEFAULT_QUAD) -> CovMatrix2:
    """Full-rank limit of Cov(F^{(1)}, F^{(2)}) / e^{r(d-1)} for d = 2k."""
    d = 2 * k
    _check_d2k(d, k)
    J = j_integral(d, k, spec)
    w = omega
    lead = w(k) ** 3 / 2.0 ** (d - 1) * J
    c = w(1) * w(d + 1) / w(k + 1) ** 2
    extra = w(1) * w(d) * w(d + 1) / ((d - 1) * 2.0 ** d * w(k + 1) ** 2)
    entries = lead * np.array([[1.0, c], [c, c * c]]) + np.array([[0.0, 0.0], [0.0, extra]])
    mat = CovMatrix2(entries, scaling_regime(ModelParams(d, k, 2)), rank=0, meta={"J": J})
    mat.rank = mat.numerical_rank()
    return mat


def _lambda_critical(p: ModelParams, r: float, spec: QuadSpec) -> float:
    return A11(r, p, scale_exponent=r * (p.d - 1), spec=spec) / r


def sigma_matrix_rank_one(p: ModelParams, r_probe: float = 12.0, spec: QuadSpec = DEFAULT_QUAD) -> CovMatrix2:
    """Rank-one limit lambda * (C(d,k,a) C(d,k,b))_{a,b <= m} for 2k >= d+1.

    For 2k > d+1, lambda = Var(Y).  For 2k = d+1 no closed form is available;
    lambda is the finite-r value A11(r)/(r e^{r(d-1)}) at r_probe, and the
    change between r_probe and r_probe + 2 is reported as ``error_band``.
    """
    m = p.order
    if p.regime is Regime.GAUSSIAN:
        raise RegimeError(f"rank-one limit requires 2k >= d+1, got d={p.d}, k={p.k}")
    band = 0.0
    if p.regime is Regime.NON_GAUSSIAN:
        lam = y_scale(p) ** 2
    else:
        lam = _lambda_critical(p, r_probe, spec)
        band = abs(_lambda_critical(p, r_probe + 2.0, spec) - lam)
        warnings.warn(
            f"2k = d+1: lambda={lam:.6g} from r={r_probe} converges slowly (band {band:.2g})",
            RuntimeWarning,
            stacklevel=2,
        )
    cs = np.array([C_const(ModelParams(p.d, p.k, a)) for a in range(1, m + 1)])
    entries = lam * np.outer(cs, cs)
    return CovMatrix2(
        entries,
        scaling_regime(p),
        rank=1,
        error_band=band,
        meta={"lambda": lam, "C": cs.tolist()},
    )


def catalan_check(spec: QuadSpec = DEFAULT_QUAD) -> dict:
    """Compare the k = 1 matrix with (4a, 8a/pi, 16a/pi^2 + 1), a = 4G."""
    mat = sigma_matrix_full(1, spec)
    a = 4.0 * CATALAN
    ref = np.array([[4 * a, 8 * a / math.pi], [8 * a / math.pi, 16 * a / math.pi ** 2 + 1.0]])
    rel = np.abs(mat.entries - ref) / np.abs(ref)
    e = mat.entries
    return {
        "G": f"{CATALAN:.10f}",
        "a": a,
        "computed": e.tolist(),
        "reference": ref.tolist(),
        "max_rel_error": float(rel.max()),
        "schur_complement": float(e[1, 1] - e[0, 1] ** 2 / e[0, 0]),
        "J": mat.meta["J"],
    }

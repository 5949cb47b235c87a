"""Special functions and quadrature wrappers used throughout the package.

Everything here is a pure function of its arguments.  The hyperbolic helpers
work in log space so that integrands such as ``cosh(s)**k * sinh(s)**j`` can be
assembled as ``exp(k*log_cosh(s) + j*log_sinh(s) - shift)`` without overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError

__all__ = [
    "QuadSpec",
    "DEFAULT_QUAD",
    "log_gamma",
    "omega",
    "log_omega",
    "hyp_moment",
    "log_hyp_moment",
    "log_cosh",
    "log_sinh",
    "arcosh_stable",
    "arcosh_from_cm1",
    "quad_finite",
    "quad_semi_infinite",
]

EULER_GAMMA = 0.57721566490153286060651209008240243
_HALF_LOG_2PI = 0.91893853320467274178032973640561764

# B_2 .. B_20
_BERNOULLI = (
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
    Fraction(43867, 798),
    Fraction(-174611, 330),
)

# Stirling correction coefficients B_{2j} / (2j (2j-1)).
_STIRLING = tuple(float(b / ((2 * j) * (2 * j - 1))) for j, b in enumerate(_BERNOULLI, start=1))

_STIRLING_MIN = 10.0
_SERIES_TERMS = 45


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances handed to the adaptive quadrature routines."""

    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    max_subdivisions: int = 500

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be > 0, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise DomainError(f"max_subdivisions must be a positive integer, got {self.max_subdivisions}")


DEFAULT_QUAD = QuadSpec()


# --------------------------------------------------------------------------
# Gamma function
# --------------------------------------------------------------------------


def _zeta_minus_one(k: int) -> float:
    """zeta(k) - 1 for integer k >= 2 by Euler-Maclaurin with cut N = 10."""
    n_cut = 10
    head = math.fsum(n ** -float(k) for n in range(2, n_cut))
    tail = n_cut ** (1.0 - k) / (k - 1) + 0.5 * n_cut ** -float(k)
    rising = float(k)  # k (k+1) ... (k+2j-2)
    fact = 2.0  # (2j)!
    for j, b in enumerate(_BERNOULLI, start=1):
        if j > 1:
            rising *= (k + 2 * j - 3) * (k + 2 * j - 2)
            fact *= (2 * j - 1) * (2 * j)
        tail += float(b) / fact * rising * n_cut ** (-k - 2.0 * j + 1.0)
    return head + tail


@lru_cache(maxsize=None)
def _series_coefficients() -> tuple:
    return tuple(
        (-1.0) ** k * _zeta_minus_one(k) / k for k in range(2, _SERIES_TERMS + 2)
    )


def _lgamma_two_plus(z: float) -> float:
    """ln Gamma(2 + z) for |z| <= 1/2 via the (zeta(k) - 1) power series.

    Keeps full relative accuracy near the root of ln Gamma at 2, which a
    shifted Stirling series cannot.
    """
    acc = 0.0
    zk = z * z
    for c in _series_coefficients():
        acc += c * zk
        zk *= z
    return z * (1.0 - EULER_GAMMA) + acc


def _lgamma_stirling(x: float) -> float:
    inv = 1.0 / x
    inv2 = inv * inv
    corr = 0.0
    p = inv
    for c in _STIRLING:
        corr += c * p
        p *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + corr


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0.

    Stirling series for x >= 10 with an upward shift below that, and a power
    series around 1 and 2 where ln Gamma vanishes.
    """
    x = float(x)
    if not x > 0 or math.isnan(x):
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    if math.isinf(x):
        return math.inf
    if x < 0.5:
        return log_gamma(x + 1.0) - math.log(x)
    if x < 1.5:
        z = x - 1.0
        return _lgamma_two_plus(z) - math.log1p(z)
    if x < 2.5:
        return _lgamma_two_plus(x - 2.0)
    if x >= _STIRLING_MIN:
        return _lgamma_stirling(x)
    n = int(math.ceil(_STIRLING_MIN - x))
    prod = 1.0
    for i in range(n):
        prod *= x + i
    return _lgamma_stirling(x + n) - math.log(prod)


def log_omega(j: int) -> float:
    if int(j) != j or j < 1:
        raise DomainError(f"omega requires a positive integer, got {j}")
    return math.log(2.0) + 0.5 * j * math.log(math.pi) - log_gamma(0.5 * j)


def omega(j: int) -> float:
    """Surface area of the unit sphere in R^j, i.e. 2 pi^(j/2) / Gamma(j/2)."""
    return math.exp(log_omega(j))


def log_hyp_moment(a: float, b: float) -> float:
    if not (-a > b > -1.0):
        raise DomainError(f"hyp_moment needs -a > b > -1, got a={a}, b={b}")
    return (
        log_gamma(-0.5 * (a + b))
        + log_gamma(0.5 * (b + 1.0))
        - log_gamma(0.5 * (1.0 - a))
        - math.log(2.0)
    )


def hyp_moment(a: float, b: float) -> float:
    """Closed form of the integral of cosh(s)**a * sinh(s)**b over [0, inf).

    Converges iff -a > b > -1.
    """
    return math.exp(log_hyp_moment(a, b))


# --------------------------------------------------------------------------
# Hyperbolic helpers (numpy-aware)
# --------------------------------------------------------------------------

_LOG2 = math.log(2.0)


def _log_cosh(s):
    s = np.abs(s)
    return s + np.log1p(np.exp(-2.0 * s)) - _LOG2


def _log_sinh(s):
    # -expm1(-2s) keeps precision for tiny s; s = 0 gives -inf.
    with np.errstate(divide="ignore"):
        return s + np.log(-np.expm1(-2.0 * s)) - _LOG2


def _scalar_or_array(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x


def log_cosh(s):
    """ln cosh(s), finite for any real s."""
    return _scalar_or_array(_log_cosh(np.asarray(s, dtype=float)))


def log_sinh(s):
    """ln sinh(s) for s > 0."""
    arr = np.asarray(s, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("log_sinh requires s > 0")
    return _scalar_or_array(_log_sinh(arr))


def _arcosh_from_cm1(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x > 1e8
    xs = x[~big]
    out[~big] = np.log1p(xs + np.sqrt(xs * (xs + 2.0)))
    xb = x[big] + 1.0
    out[big] = np.log(2.0 * xb) - 0.25 / (xb * xb)
    return out


def arcosh_from_cm1(x):
    """arcosh(1 + x) given x = y - 1 >= 0 directly (no cancellation near y = 1)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr >= 0)):
        raise DomainError("arcosh_from_cm1 requires x >= 0")
    return _scalar_or_array(_arcosh_from_cm1(arr))


def arcosh_stable(y):
    """arcosh(y) = ln(y + sqrt(y^2 - 1)) for y >= 1, accurate near y = 1."""
    arr = np.asarray(y, dtype=float)
    if np.any(~(arr >= 1)):
        raise DomainError("arcosh_stable requires y >= 1")
    return _scalar_or_array(_arcosh_from_cm1(arr - 1.0))


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------


def quad_finite(f, lo: float, hi: float, spec: QuadSpec = DEFAULT_QUAD, points=None) -> float:
    """Adaptive Gauss-Kronrod integral of a scalar function over [lo, hi].

    Backed by QUADPACK (scipy.integrate.quad).  Raises QuadratureError when
    the subdivision budget is spent or the error estimate misses the
    requested tolerance by more than three orders of magnitude.
    """
    if hi == lo:
        return 0.0
    res = integrate.quad(
        f,
        lo,
        hi,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=int(spec.max_subdivisions),
        points=points,
        full_output=1,
    )
    value, abserr, info = res[0], res[1], res[2]
    if len(res) > 3:
        msg = res[3]
        limit_hit = "maximum number of subdivisions" in msg
        target = max(spec.abs_tol, spec.rel_tol * abs(value))
        if limit_hit or abserr > 1e3 * target or not math.isfinite(value):
            raise QuadratureError(
                f"quadrature on [{lo}, {hi}] failed after {info.get('last', '?')} "
                f"subintervals: estimate={value!r}, abserr={abserr!r}",
                estimate=value,
                abserr=abserr,
            )
    return float(value)


def quad_semi_infinite(f, lo: float, spec: QuadSpec = DEFAULT_QUAD, rate: float = 1.0) -> float:
    """Integral of f over [lo, inf) for exponentially decaying f.

    Substitutes x = lo - ln(u)/rate, which maps the tail onto u in (0, 1]
    and turns an e^{-rate x} decay into an algebraic endpoint behaviour that
    QUADPACK's extrapolation handles well.
    """
    if not rate > 0:
        raise DomainError("rate must be positive")

    def g(u):
        if u <= 0.0:
            return 0.0
        return f(lo - math.log(u) / rate) / (rate * u)

    return quad_finite(g, 0.0, 1.0, spec)

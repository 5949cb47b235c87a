"""Radial kernels of the first chaos and the finite-r variance integrals.

A k-flat at hyperbolic distance s from the centre of B_r meets the ball in a
k-dimensional hyperbolic ball whose volume is

    slice_volume(s, r) = omega_k * int_0^{arcosh(cosh r / cosh s)} sinh^{k-1}(u) du.

With c = cosh r / cosh s the inner integral equals int_1^c (y^2 - 1)^{(k-2)/2} dy,
which is evaluated in closed form (series near c = 1, a two-step recurrence
otherwise).  The quadrature variants ``g_r_arcosh`` and ``g_r_closed`` are
kept as independent reference routes.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AdmissibilityError, DomainError
from .params import ModelParams
from .special import (
    DEFAULT_QUAD,
    QuadSpec,
    _arcosh_from_cm1,
    _log_cosh,
    _log_sinh,
    log_omega,
    omega,
    quad_finite,
)

__all__ = [
    "g",
    "log_g",
    "g_r",
    "g_r_arcosh",
    "g_r_closed",
    "slice_volume",
    "sinh_power_area",
    "cosh_ratio_cm1",
    "C_const",
    "log_mu",
    "A11",
    "A22",
    "c1_const",
    "c2_const",
    "mean_F1",
]

_SERIES_SWITCH = 0.5
_SERIES_TERMS = 40


def _check_k(k, lowest=1):
    if int(k) != k or k < lowest:
        raise DomainError(f"k must be an integer >= {lowest}, got {k}")


def g_prefactor(k: int) -> float:
    """omega_k / ((k-1) 2^{k-1}), the scale between Z and the limit Y."""
    _check_k(k, 2)
    return omega(k) / ((k - 1) * 2.0 ** (k - 1))


def log_g(s, k: int):
    _check_k(k, 2)
    s = np.asarray(s, dtype=float)
    return math.log(g_prefactor(k)) - (k - 1) * _log_cosh(s)


def g(s, k: int):
    """Limiting first-chaos kernel g(s) = omega_k/((k-1)2^{k-1}) cosh^{-(k-1)}(s)."""
    out = np.exp(log_g(s, k))
    return out.item() if out.ndim == 0 else out


def cosh_ratio_cm1(s, r):
    """cosh(r)/cosh(s) - 1 for 0 <= s <= r, without cancellation near s = r.

    Uses cosh r - cosh s = 2 sinh((r+s)/2) sinh((r-s)/2).  Entries with
    s >= r are returned as 0.
    """
    s = np.asarray(s, dtype=float)
    r = float(r)
    inside = s < r
    out = np.zeros(np.broadcast(s, r).shape)
    si = np.broadcast_to(s, out.shape)[inside]
    log_x = (
        math.log(2.0)
        + _log_sinh(0.5 * (r + si))
        + _log_sinh(0.5 * (r - si))
        - _log_cosh(si)
    )
    out[inside] = np.exp(log_x)
    return out


def _area_series(k: int, x):
    # int_0^x t^p (2 + t)^p dt with p = (k-2)/2, expanded in powers of x/2.
    p = 0.5 * (k - 2)
    half = 0.5 * x
    acc = np.zeros_like(x)
    coef = 1.0  # binom(p, j)
    power = np.ones_like(x)
    for j in range(_SERIES_TERMS):
        acc += coef * power / (p + j + 1.0)
        coef *= (p - j) / (j + 1.0)
        power = power * half
        if coef == 0.0:
            break
    return 2.0 ** p * x ** (p + 1.0) * acc


def _area_recurrence(k: int, x):
    c = 1.0 + x
    c2m1 = x * (x + 2.0)
    n = k - 2
    if n % 2:
        prev, m = _arcosh_from_cm1(x), -1
    else:
        prev, m = x.copy(), 0
    while m < n:
        m += 2
        prev = (c * c2m1 ** (0.5 * m) - m * prev) / (m + 1.0)
    return prev


def sinh_power_area(k: int, cm1):
    """int_0^{arcosh(1 + cm1)} sinh^{k-1}(u) du, vectorised over cm1 >= 0."""
    _check_k(k, 1)
    x = np.atleast_1d(np.asarray(cm1, dtype=float))
    if np.any(~(x >= 0)):
        raise DomainError("sinh_power_area needs cm1 >= 0")
    out = np.empty_like(x)
    small = x < _SERIES_SWITCH
    if np.any(small):
        out[small] = _area_series(k, x[small])
    if np.any(~small):
        out[~small] = _area_recurrence(k, x[~small])
    out = out.reshape(np.shape(cm1))
    return out.item() if out.ndim == 0 else out


def slice_volume(s, r: float, k: int):
    """k-volume of E intersected with B_r for a k-flat E at distance s from the centre."""
    _check_k(k, 1)
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("s must be nonnegative")
    x = cosh_ratio_cm1(s, r)
    out = omega(k) * np.asarray(sinh_power_area(k, x), dtype=float)
    out = np.where(s < r, out, 0.0)
    return out.item() if out.ndim == 0 else out


def log_slice_volume(s, r: float, k: int):
    """ln slice_volume, -inf where the flat misses the ball."""
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(slice_volume(s, r, k), dtype=float))


def g_r(s, r: float, k: int):
    """Finite-r first-chaos kernel g_r(s) = e^{-(k-1)r} slice_volume(s, r).

    Vectorised closed-form evaluation; the exponential is applied in log space.
    """
    _check_k(k, 2)
    lv = log_slice_volume(s, r, k)
    out = np.exp(lv - (k - 1) * float(r))
    return out.item() if np.ndim(out) == 0 else out


def g_r_arcosh(s: float, r: float, k: int, spec: QuadSpec = DEFAULT_QUAD) -> float:
    """g_r by quadrature over u in [0, arcosh(cosh r / cosh s)]."""
    _check_k(k, 2)
    s, r = float(s), float(r)
    if s >= r:
        return 0.0
    upper = float(_arcosh_from_cm1(np.array([cosh_ratio_cm1(s, r).item()]))[0])
    shift = (k - 1) * r

    def integrand(u):
        if u <= 0.0:
            return 0.0
        return math.exp((k - 1) * float(_log_sinh(u)) - shift)

    return omega(k) * quad_finite(integrand, 0.0, upper, spec)


def g_r_closed(s: float, r: float, k: int, spec: QuadSpec = DEFAULT_QUAD) -> float:
    """g_r through the identity with int_s^r (sinh^2 u - sinh^2 s)^{(k-2)/2} sinh u du.

    sinh^2 u - sinh^2 s is written as sinh(u-s) sinh(u+s) and the integral is
    taken in w with u = s + w^2, which smooths the endpoint u = s.
    """
    _check_k(k, 2)
    s, r = float(s), float(r)
    if s >= r:
        return 0.0
    shift = (k - 1) * r + (k - 1) * float(_log_cosh(s))
    if k == 2:
        # integrand is sinh u; the integral is cosh r - cosh s
        cm1 = cosh_ratio_cm1(s, r).item()
        return omega(2) * math.exp(math.log(cm1) + float(_log_cosh(s)) - shift)
    half = 0.5 * (k - 2)

    def integrand(w):
        if w <= 0.0:
            return 0.0
        u = s + w * w
        log_val = (
            half * (float(_log_sinh(w * w)) + float(_log_sinh(u + s)))
            + float(_log_sinh(u))
            - shift
        )
        return 2.0 * w * math.exp(log_val)

    return omega(k) * quad_finite(integrand, 0.0, math.sqrt(r - s), spec)


def C_const(p: ModelParams) -> float:
    """C(d,k,m) = (omega_{d+1}/omega_{k+1})^{m-1} omega_{d-m(d-k)+1} / ((m-1)! omega_{k+1})."""
    d, k, m = p.d, p.k, p.order
    if d - m * (d - k) < 0:
        raise AdmissibilityError(f"requires d - m(d-k) >= 0, got d={d}, k={k}, m={m}")
    log_c = (
        (m - 1) * (log_omega(d + 1) - log_omega(k + 1))
        + log_omega(d - m * (d - k) + 1)
        - log_omega(k + 1)
        - math.lgamma(m)
    )
    return math.exp(log_c)


def log_mu(s, d: int, k: int):
    """ln(cosh^k(s) sinh^{d-k-1}(s)), the radial density without omega_{d-k}."""
    s = np.asarray(s, dtype=float)
    out = k * _log_cosh(s)
    if d - k - 1:
        out = out + (d - k - 1) * _log_sinh(s)
    return out


def c1_const(p: ModelParams) -> float:
    """Prefactor of A11: omega_k^2 omega_{d-k} (equal to omega_k^3 when d = 2k)."""
    return omega(p.k) ** 2 * omega(p.d - p.k)


def c2_const(p: ModelParams) -> float:
    """omega_1 omega_d omega_{d+1} / (4 omega_{k+1}^2)."""
    d, k = p.d, p.k
    return omega(1) * omega(d) * omega(d + 1) / (4.0 * omega(k + 1) ** 2)


def _radial_integral(r, p, power, scale_exponent, spec):
    d, k = p.d, p.k
    log_pref = log_omega(d - k)

    def integrand(t):
        s = r - t
        if s <= 0.0 or t <= 0.0:
            return 0.0
        lv = float(log_slice_volume(s, r, k))
        return math.exp(power * lv + float(log_mu(s, d, k)) + log_pref - scale_exponent)

    # t = r - s puts the bulk of the mass near t = 0
    return quad_finite(integrand, 0.0, r, spec)


def A11(r: float, p: ModelParams, scale_exponent: float = 0.0, spec: QuadSpec = DEFAULT_QUAD) -> float:
    """Variance of the first chaos, omega_{d-k} int_0^r slice_volume^2 mu ds.

    Returns the value multiplied by exp(-scale_exponent) so callers can
    normalise by e^{r(d-1)} or e^{2r(k-1)} without overflow.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    return _radial_integral(float(r), p, 2, scale_exponent, spec)


def mean_F1(r: float, p: ModelParams, scale_exponent: float = 0.0, spec: QuadSpec = DEFAULT_QUAD) -> float:
    """E[F_r^{(1)}] = omega_{d-k} int_0^r slice_volume(s, r) mu(s) ds."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    return _radial_integral(float(r), p, 1, scale_exponent, spec)


def A22(r: float, p: ModelParams, scale_exponent: float = 0.0, spec: QuadSpec = DEFAULT_QUAD) -> float:
    """A^{(2)}_{r,2} = c2 int_0^r sinh^{d-1}(s) ds, defined for d = 2k only."""
    if p.d != 2 * p.k:
        raise AdmissibilityError(f"A22 requires d = 2k, got d={p.d}, k={p.k}")
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    r = float(r)
    log_c2 = math.log(c2_const(p))
    n = p.d - 1

    def integrand(t):
        s = r - t
        if s <= 0.0:
            return 0.0
        return math.exp(n * float(_log_sinh(s)) + log_c2 - scale_exponent)

    return quad_finite(integrand, 0.0, r, spec)

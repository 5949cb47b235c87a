"""The infinitely divisible limit law Z_{d,k} and its finite-r approximants.

Public CF, cumulant and density routines refer to the standardised variable
Z* = Z / sigma unless the name ends in ``_raw``.  The Levy measure of Z lives
on (0, 1): a flat at distance s contributes a jump h(s) = cosh^{-(k-1)}(s),
and the flats form a Poisson process on [0, inf) with intensity
omega_{d-k} cosh^k(s) sinh^{d-k-1}(s).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError
from .geometry import g_prefactor, g_r, log_mu
from .params import InversionSpec, ModelParams, DEFAULT_INVERSION
from .special import (
    DEFAULT_QUAD,
    QuadSpec,
    _log_cosh,
    hyp_moment,
    log_gamma,
    log_omega,
    omega,
    quad_finite,
    quad_semi_infinite,
)

log = logging.getLogger(__name__)

__all__ = [
    "DensityTable",
    "h",
    "mu_density",
    "sigma2",
    "cumulant_std",
    "cumulant_raw",
    "cf_exponent_series",
    "q",
    "cf_exponent_quadrature",
    "cf_exponent_quadrature_raw",
    "cf_std",
    "density",
    "levy_density",
    "cf_Y",
    "cf_Yr",
    "esseen_dk_bound",
    "kolmogorov_distance_Yr",
    "cumulant_scan",
    "y_scale",
]

IMAG_RESIDUE_TOL = 1e-6
_SINE_TERMS = 9
_LOG2 = math.log(2.0)
# Terms below this for three consecutive orders end an adaptive series.
_ADAPTIVE_FLOOR = 1e-16
_ADAPTIVE_MAX_ORDER = 4000
_CANCELLATION_TOL = 1e-8


def h(s, k: int):
    """cosh^{-(k-1)}(s), the jump size of a flat at distance s."""
    if int(k) != k or k < 2:
        raise DomainError(f"h needs an integer k >= 2, got {k}")
    out = np.exp(-(k - 1) * _log_cosh(np.asarray(s, dtype=float)))
    return out.item() if out.ndim == 0 else out


def mu_density(s, p: ModelParams):
    """cosh^k(s) sinh^{d-k-1}(s) (omega_{d-k} not included)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("mu_density needs s >= 0")
    if p.d - p.k - 1 == 0:
        out = np.exp(p.k * _log_cosh(s))
    else:
        small = s <= 30.0
        out = np.empty_like(s)
        ss = s[small]
        out[small] = np.cosh(ss) ** p.k * np.sinh(ss) ** (p.d - p.k - 1)
        out[~small] = np.exp(log_mu(s[~small], p.d, p.k))
    return out.item() if out.ndim == 0 else out


def sigma2(p: ModelParams) -> float:
    """Variance of Z: omega_{d-k} * I(2-k, d-k-1)."""
    p.require_limit_law()
    return omega(p.d - p.k) * hyp_moment(2 - p.k, p.d - p.k - 1)


def y_scale(p: ModelParams) -> float:
    """Standard deviation of Y = g_prefactor(k) * Z, i.e. the factor taking Z* to Y."""
    return g_prefactor(p.k) * math.sqrt(sigma2(p))


def _log_cumulant_std(n: int, p: ModelParams) -> float:
    d, k = p.d, p.k
    return (
        (1.0 - 0.5 * n) * 0.5 * (d - k) * math.log(math.pi)
        + 0.5 * n * (log_gamma(0.5 * (k - 1)) - log_gamma(0.5 * (2 * k - d - 1)))
        + log_gamma(0.5 * (n * (k - 1) + 1 - d))
        - log_gamma(0.5 * (n * (k - 1) + 1 - k))
    )


def cumulant_std(n: int, p: ModelParams) -> float:
    """n-th cumulant of Z* in closed Gamma form (evaluated in log space)."""
    p.require_limit_law()
    if int(n) != n or n < 2:
        raise DomainError(f"cumulant order must be an integer >= 2, got {n}")
    return math.exp(_log_cumulant_std(int(n), p))


def cumulant_raw(n: int, p: ModelParams) -> float:
    """n-th cumulant of the unstandardised Z, omega_{d-k} I(k - n(k-1), d-k-1)."""
    p.require_limit_law()
    if int(n) != n or n < 2:
        raise DomainError(f"cumulant order must be an integer >= 2, got {n}")
    return omega(p.d - p.k) * hyp_moment(p.k - n * (p.k - 1), p.d - p.k - 1)


_I_POW = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def cf_exponent_series(t, p: ModelParams, N: int = DEFAULT_INVERSION.N, adaptive: bool = False):
    """Partial sum over n = 2..N of (it)^n / n! * cum_n(Z*).

    With ``adaptive=True`` the sum continues past N until three consecutive
    terms fall below 1e-16 at every requested t.  The series alternates, so
    for large |t| its terms dwarf the result; a RuntimeWarning is issued
    when rounding in the largest term could exceed 1e-8, and
    ``cf_exponent_quadrature`` should be used instead.
    """
    p.require_limit_law()
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N}")
    t_arr = np.asarray(t, dtype=float)
    abs_t = np.abs(t_arr)
    sign = np.sign(t_arr)
    nz = abs_t > 0
    log_abs_t = np.log(np.where(nz, abs_t, 1.0))
    total = np.zeros(t_arr.shape, dtype=complex)
    quiet = 0
    biggest = 0.0
    n = 2
    while True:
        log_c = _log_cumulant_std(n, p) - math.lgamma(n + 1.0)
        mag = np.where(nz, np.exp(n * log_abs_t + log_c), 0.0)
        if mag.size:
            biggest = max(biggest, float(mag.max()))
        total += _I_POW[n % 4] * mag * sign ** n
        if n >= N:
            if not adaptive:
                break
            quiet = quiet + 1 if (mag.size == 0 or mag.max() < _ADAPTIVE_FLOOR) else 0
            if quiet >= 3 or n >= _ADAPTIVE_MAX_ORDER:
                break
        n += 1
    if biggest * 2.0 ** -52 > _CANCELLATION_TOL:
        msg = (
            f"cumulant series for d={p.d}, k={p.k} reached terms of size {biggest:.3g}; "
            "cancellation makes the sum unreliable"
        )
        log.warning(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return total.item() if total.ndim == 0 else total


def _sin_minus_x_over_x3(x2):
    """(sin x - x) / x^3 as a Horner series in x^2, accurate for |x| < 1."""
    acc = np.ones_like(x2)
    for n in range(_SINE_TERMS, 0, -1):
        acc = 1.0 - x2 / ((2 * n + 2) * (2 * n + 3)) * acc
    return -acc / 6.0


def q(x):
    """q(x) = e^{ix} - 1 - ix, with the cancellations removed for small |x|."""
    shape = np.shape(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    re = -2.0 * np.sin(0.5 * x) ** 2
    im = np.sin(x) - x
    small = np.abs(x) < 1.0
    xs = x[small]
    im[small] = xs ** 3 * _sin_minus_x_over_x3(xs * xs)
    out = (re + 1j * im).reshape(shape)
    return out.item() if out.ndim == 0 else out


def _q_over_x2(x):
    """q(x) / x^2 as (real, imag) arrays, finite at x = 0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    tiny = np.abs(x) < 1e-8
    safe = np.where(tiny, 1.0, x)
    half = 0.5 * safe
    sinc_half = np.sin(half) / half
    re = -0.5 * sinc_half ** 2
    im = (np.sin(safe) - safe) / (safe * safe)
    small = np.abs(x) < 1.0
    xs = x[small]
    im[small] = xs * _sin_minus_x_over_x3(xs * xs)
    re = np.where(tiny, -0.5, re)
    return re, im


def _cf_exponent_adaptive(a: float, p: ModelParams, spec: QuadSpec) -> complex:
    # omega_{d-k} int_0^inf q(a h(s)) mu(s) ds with q(x) = x^2 * (q(x)/x^2)
    if a == 0.0:
        return 0j
    d, k = p.d, p.k
    log_pref = log_omega(d - k) + 2.0 * math.log(abs(a))

    def weight(s):
        lc = s + math.log1p(math.exp(-2.0 * s)) - _LOG2
        lm = k * lc
        if d - k - 1:
            lm += (d - k - 1) * (s + math.log(-math.expm1(-2.0 * s)) - _LOG2)
        lh = -(k - 1) * lc
        return math.exp(2.0 * lh + lm + log_pref), a * math.exp(lh)

    def real_part(s):
        if s <= 0.0 and d - k - 1:
            return 0.0
        w, x = weight(s)
        if abs(x) < 1e-8:
            # sinc^2 = 1 to double precision; also avoids underflow of x/2
            return -0.5 * w
        half = 0.5 * x
        return -0.5 * w * (math.sin(half) / half) ** 2

    def imag_part(s):
        if s <= 0.0 and d - k - 1:
            return 0.0
        w, x = weight(s)
        if abs(x) < 0.05:
            x2 = x * x
            return -w * x / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
        return w * (math.sin(x) - x) / (x * x)

    rate = float(2 * k - d - 1)
    return complex(
        quad_semi_infinite(real_part, 0.0, spec, rate=rate),
        quad_semi_infinite(imag_part, 0.0, spec, rate=rate),
    )


def cf_exponent_quadrature(t: float, p: ModelParams, spec: QuadSpec = DEFAULT_QUAD) -> complex:
    """log psi~(t) for Z* by adaptive quadrature of omega_{d-k} int q(t h / sigma) d mu."""
    p.require_limit_law()
    return _cf_exponent_adaptive(float(t) / math.sqrt(sigma2(p)), p, spec)


def cf_exponent_quadrature_raw(t: float, p: ModelParams, spec: QuadSpec = DEFAULT_QUAD) -> complex:
    """log psi(t) for the unstandardised Z."""
    p.require_limit_law()
    return _cf_exponent_adaptive(float(t), p, spec)


def cf_std(t, p: ModelParams, spec: InversionSpec = DEFAULT_INVERSION, adaptive: bool = False):
    """Characteristic function of Z*, exp of the order-N exponent series."""
    out = np.exp(np.asarray(cf_exponent_series(t, p, spec.N, adaptive=adaptive)))
    return out.item() if out.ndim == 0 else out


@dataclass
class DensityTable:
    """Density of Z* on a sorted grid with its trapezoid CDF."""

    xs: np.ndarray
    f: np.ndarray
    cdf: np.ndarray
    max_density: float
    imag_residue: float = 0.0
    rule: str = "left"
    params: dict = field(default_factory=dict)

    def cdf_at(self, x):
        """Linear interpolation of the tabulated CDF, clamped to [0, 1] outside the grid."""
        return np.interp(x, self.xs, self.cdf, left=0.0, right=1.0)

    def mass(self) -> float:
        return float(trapezoid(self.f, self.xs))

    def moment(self, order: int) -> float:
        return float(trapezoid(self.xs ** order * self.f, self.xs))

    def scaled(self, scale: float) -> "DensityTable":
        """Table of scale * Z* (density f(x/scale)/scale)."""
        return DensityTable(
            xs=self.xs * scale,
            f=self.f / scale,
            cdf=self.cdf,
            max_density=self.max_density / scale,
            imag_residue=self.imag_residue / scale,
            rule=self.rule,
            params=dict(self.params, scale=scale),
        )


def default_grid(step: float = 0.01, lo: float = -8.0, hi: float = 12.0) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def density(
    p: ModelParams,
    spec: InversionSpec = DEFAULT_INVERSION,
    xs=None,
    rule: str = "left",
    adaptive: bool = False,
) -> DensityTable:
    """Fourier inversion of psi~ on the grid t_j = (-1 + 2j/M) T.

    ``rule="left"`` sums j = 0..M-1 with weight T/(pi M); ``"trapezoid"``
    adds t_M = T and halves both endpoint weights.  The real part is the
    density; the largest imaginary part is kept as ``imag_residue``.
    ``adaptive`` extends the cumulant series past spec.N (needed for T
    well beyond the defaults).
    """
    p.require_limit_law()
    xs = default_grid() if xs is None else np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or np.any(np.diff(xs) <= 0):
        raise DomainError("xs must be a strictly increasing 1-d grid")
    T, M = float(spec.T), int(spec.M)
    j = np.arange(M + 1)
    tj = (-1.0 + 2.0 * j / M) * T
    w = np.full(M + 1, T / (math.pi * M))
    if rule == "left":
        w[-1] = 0.0
    elif rule == "trapezoid":
        w[0] *= 0.5
        w[-1] *= 0.5
    else:
        raise DomainError(f"unknown rule {rule!r}")
    psi = np.asarray(cf_std(tj, p, spec, adaptive=adaptive), dtype=complex)
    # one row per x, fixed summation order over j
    vals = np.exp(-1j * np.outer(xs, tj)) @ (w * psi)
    f = vals.real
    resid = float(np.max(np.abs(vals.imag)))
    if resid > IMAG_RESIDUE_TOL:
        msg = (
            f"density inversion for d={p.d}, k={p.k}: imaginary residue {resid:.3e} "
            f"exceeds {IMAG_RESIDUE_TOL:g}"
        )
        log.warning(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(xs))])
    return DensityTable(
        xs=xs,
        f=f,
        cdf=cdf,
        max_density=float(f.max()),
        imag_residue=resid,
        rule=rule,
        params={"d": p.d, "k": p.k, **spec.as_dict()},
    )


def levy_density(y, p: ModelParams):
    """Levy density of Z on (0, 1)."""
    p.require_limit_law()
    y = np.asarray(y, dtype=float)
    if np.any(~((y > 0) & (y < 1))):
        raise DomainError("levy_density is supported on (0, 1)")
    d, k = p.d, p.k
    expo = 0.5 * (d - k) - 1.0
    log_rho = (
        log_omega(d - k)
        - math.log(k - 1)
        - (d + k - 2) / (k - 1) * np.log(y)
    )
    if expo != 0.0:
        log_rho = log_rho + expo * np.log1p(-(y ** (2.0 / (k - 1))))
    out = np.exp(log_rho)
    return out.item() if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Characteristic functions of Y_r and Y on whole t-grids
# --------------------------------------------------------------------------


def _gl_panels(lo: float, hi: float, width: float, order: int = 20):
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    n_pan = max(1, int(math.ceil((hi - lo) / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_pan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _cf_exponent_from_jumps(t, log_jump, log_weight):
    # sum_i w_i q(t * jump_i) in the stable x^2 * q(x)/x^2 form
    t = np.atleast_1d(np.asarray(t, dtype=float))
    jump = np.exp(log_jump)
    out = np.empty(t.shape, dtype=complex)
    base = np.exp(2.0 * log_jump + log_weight)
    for i, ti in enumerate(t):
        re, im = _q_over_x2(ti * jump)
        out[i] = ti * ti * complex(np.dot(base, re), np.dot(base, im))
    return out


def _tail_cutoff(p: ModelParams, t_max: float) -> float:
    # int_{s0}^inf g^2 dmu <= 2 omega_k^2/((k-1)^2(2k-d-1)) e^{-(2k-d-1) s0}
    d, k = p.d, p.k
    rate = 2 * k - d - 1
    c = 2.0 * omega(k) ** 2 / ((k - 1) ** 2 * rate) * omega(d - k) * max(t_max, 1.0) ** 2
    return max(10.0, math.log(c / 1e-16) / rate)


def cf_Y(t, p: ModelParams, panel_width: float = 0.125):
    """Characteristic function of Y = g_prefactor(k) Z by quadrature over s.

    The Levy integral is truncated where the L2 tail bound drops below 1e-16.
    """
    p.require_limit_law()
    t_arr = np.asarray(t, dtype=float)
    s_max = _tail_cutoff(p, float(np.max(np.abs(t_arr))) if t_arr.size else 1.0)
    s, w = _gl_panels(0.0, s_max, panel_width)
    lg = math.log(g_prefactor(p.k)) - (p.k - 1) * _log_cosh(s)
    lw = np.log(w) + log_mu(s, p.d, p.k) + log_omega(p.d - p.k)
    out = np.exp(_cf_exponent_from_jumps(t_arr, lg, lw)).reshape(t_arr.shape)
    return out.item() if out.ndim == 0 else out


def cf_Yr(t, r: float, p: ModelParams, panel_width: float = 0.125):
    """Characteristic function of Y_r = (F_r - E F_r) e^{-(k-1) r}.

    phi_r(t) = exp(omega_{d-k} int_0^r q(t g_r(s)) mu(ds)); g_r vanishes for s >= r.
    """
    p.require_limit_law()
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    t_arr = np.asarray(t, dtype=float)
    s, w = _gl_panels(0.0, float(r), panel_width)
    with np.errstate(divide="ignore"):
        lg = np.log(np.asarray(g_r(s, r, p.k), dtype=float))
    lw = np.log(w) + log_mu(s, p.d, p.k) + log_omega(p.d - p.k)
    out = np.exp(_cf_exponent_from_jumps(t_arr, lg, lw)).reshape(t_arr.shape)
    return out.item() if out.ndim == 0 else out


def esseen_dk_bound(
    r: float,
    p: ModelParams,
    T: float,
    table: DensityTable,
    n_nodes: int = 400,
) -> float:
    """Smoothing-inequality bound on the Kolmogorov distance between Y_r and Y.

    (1/pi) int_{-T}^{T} |phi_r - phi| / |t| dt + 24 M / (pi T), with M the
    sup of the Y density obtained from the Z* table by scaling.  The
    integrand is even in t and vanishes at t = 0, so the integral is taken as
    twice a Gauss-Legendre sum over (0, T].
    """
    p.require_limit_law()
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    panels = max(1, n_nodes // 20)
    t, w = _gl_panels(0.0, float(T), float(T) / panels)
    diff = np.abs(cf_Yr(t, r, p) - cf_Y(t, p))
    integral = 2.0 * float(np.dot(w, diff / t)) / math.pi
    m_y = table.max_density / y_scale(p)
    return integral + 24.0 * m_y / (math.pi * T)


def kolmogorov_distance_Yr(
    r: float,
    p: ModelParams,
    xs=None,
    t_max: float = 60.0,
    panel_width: float = 0.25,
) -> float:
    """sup_x |P(Y_r <= x) - P(Y <= x)| from the two characteristic functions.

    Gil-Pelaez gives F_r(x) - F(x) = -(1/pi) int_0^inf Im(e^{-itx}(phi_r - phi)(t)) / t dt;
    the integral is cut at ``t_max`` where both CFs are negligible.  The
    supremum is taken over ``xs`` (default: 1501 points on [-5v, 10v], v the
    standard deviation of Y).
    """
    p.require_limit_law()
    v = y_scale(p)
    xs = np.linspace(-5.0 * v, 10.0 * v, 1501) if xs is None else np.asarray(xs, dtype=float)
    t, w = _gl_panels(0.0, float(t_max), panel_width)
    dphi = (cf_Yr(t, r, p) - cf_Y(t, p)) * w / t
    best = 0.0
    for chunk in np.array_split(xs, max(1, xs.size // 256)):
        diff = np.imag(np.exp(-1j * np.outer(chunk, t)) @ dphi) / math.pi
        best = max(best, float(np.abs(diff).max()))
    return best


def cumulant_scan(n: int, pairs) -> list:
    """Rows (d, k, cum_n(Z*)) sorted by d then k."""
    rows = []
    for p in pairs:
        rows.append({"d": p.d, "k": p.k, "cumulant": cumulant_std(n, p)})
    rows.sort(key=lambda row: (row["d"], row["k"]))
    return rows

"""Monte Carlo for the radial Poisson process and the variables built on it.

A stationary Poisson k-flat process seen from a fixed centre reduces to an
inhomogeneous Poisson process of distances on [0, inf) with intensity
omega_{d-k} cosh^k(s) sinh^{d-k-1}(s).  Its mean measure grows like
e^{(d-1)s}, so a draw of F_r or of the truncated Z can contain 1e9 points or
more.  Samplers therefore place points exactly (Poisson count plus inverse
transform) on [0, s_c] with Lambda(s_c) = ``exact_points`` and replace the
sum over (s_c, bound] by a shifted gamma variable with the same mean,
variance and third cumulant.  Beyond s_c every jump is small compared with
the spread of that sum, so the remainder is close to Gaussian and the
three-cumulant match leaves an error far below Monte Carlo noise.  Passing
``exact_points=math.inf`` switches the approximation off.

Draws are produced in blocks of ``BLOCK_SIZE``; block b uses its own PCG64
stream spawned from (seed, b), so a batch depends only on (seed, n) and not on
the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .errors import DomainError
from .geometry import log_mu, log_slice_volume
from .params import ModelParams
from .special import DEFAULT_QUAD, QuadSpec, _log_cosh, log_omega, quad_finite

__all__ = [
    "BLOCK_SIZE",
    "DEFAULT_EXACT_POINTS",
    "DEFAULT_T_TRUNC",
    "SampleBatch",
    "SampleStats",
    "RadialIntensity",
    "cumulative_intensity",
    "inverse_cumulative_intensity",
    "sample_radial_process",
    "sample_F1",
    "sample_Yr",
    "sample_Z",
    "ks_distance",
    "default_threads",
]

BLOCK_SIZE = 2048
DEFAULT_EXACT_POINTS = 256.0
DEFAULT_T_TRUNC = 12.0
# Gamma shapes above this are indistinguishable from a normal in double precision.
_NORMAL_SHAPE = 1e12

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def default_threads() -> int:
    env = os.environ.get("HYPFLAT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"HYPFLAT_THREADS must be an integer, got {env!r}") from None
    return 1


# --------------------------------------------------------------------------
# Mean measure of the radial process
# --------------------------------------------------------------------------


class RadialIntensity:
    """Cumulative intensity Lambda(s) with its inverse, on a cached grid.

    Cells have width ``step``; each cell integral is a 16-point Gauss-Legendre
    sum, which is exact to rounding for these smooth integrands.  The
    vectorised inverse interpolates s as a cubic Hermite function of
    w = Lambda^{1/(d-k)}, a variable in which s is analytic at the origin.
    """

    def __init__(self, p: ModelParams, step: float = 1.0 / 256.0):
        self.p = p
        self.step = float(step)
        self.log_omega = log_omega(p.d - p.k)
        self.j = p.d - p.k - 1
        self._edges = np.zeros(1)
        self._cum = np.zeros(1)
        self._w = np.zeros(1)
        self._dsdw = np.array([self._dsdw_origin()])

    def _dsdw_origin(self) -> float:
        # Lambda ~ omega s^{j+1}/(j+1) near 0, so s ~ ((j+1)/omega)^{1/(j+1)} w
        return ((self.j + 1) / math.exp(self.log_omega)) ** (1.0 / (self.j + 1))

    def intensity(self, s):
        s = np.asarray(s, dtype=float)
        if self.j == 0:
            return np.exp(self.log_omega + self.p.k * _log_cosh(s))
        with np.errstate(divide="ignore"):
            return np.exp(self.log_omega + log_mu(s, self.p.d, self.p.k))

    def _cell_integrals(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[..., None] + half[..., None] * _GL_X
        return half * (self.intensity(nodes) @ _GL_W)

    def _extend(self, s_max: float):
        n_have = self._edges.size - 1
        n_need = int(math.ceil(s_max / self.step)) + 1
        if n_need <= n_have:
            return
        n_need = max(n_need, 2 * n_have, 64)
        edges = self.step * np.arange(n_need + 1)
        cells = self._cell_integrals(edges[:-1], edges[1:])
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        if not np.all(np.isfinite(cum)):
            raise DomainError(f"cumulative intensity overflows below s={s_max}")
        self._edges = edges
        self._cum = cum
        self._w = cum ** (1.0 / (self.j + 1))
        lam = self.intensity(edges)
        with np.errstate(divide="ignore", invalid="ignore"):
            dsdw = (self.j + 1) * self._w ** self.j / lam
        dsdw[0] = self._dsdw_origin()
        self._dsdw = dsdw

    def cumulative(self, s):
        """Lambda(s), vectorised over s >= 0."""
        s = np.asarray(s, dtype=float)
        if np.any(~(s >= 0)):
            raise DomainError("cumulative intensity needs s >= 0")
        if s.size:
            self._extend(float(s.max()))
        idx = np.minimum((s / self.step).astype(np.int64), self._edges.size - 2)
        out = self._cum[idx] + self._cell_integrals(self._edges[idx], s)
        return out.item() if out.ndim == 0 else out

    def inverse_scalar(self, target: float, tol: float = 1e-12) -> float:
        """Bisection for Lambda(s) = target, to an absolute s-tolerance ``tol``."""
        target = float(target)
        if not target >= 0:
            raise DomainError("target must be nonnegative")
        if target == 0.0:
            return 0.0
        hi = self.step
        while self.cumulative(hi) < target:
            hi *= 2.0
        lo = 0.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.cumulative(mid) < target:
                lo = mid
            else:
                hi = mid
            if mid in (lo, hi) and hi - lo <= 4 * np.spacing(hi):
                break
        return 0.5 * (lo + hi)

    def inverse(self, targets, s_max: float) -> np.ndarray:
        """Vectorised inverse for targets in [0, Lambda(s_max)]."""
        self._extend(s_max)
        y = np.asarray(targets, dtype=float)
        w = y ** (1.0 / (self.j + 1))
        idx = np.clip(np.searchsorted(self._w, w, side="right") - 1, 0, self._w.size - 2)
        w0 = self._w[idx]
        w1 = self._w[idx + 1]
        hw = w1 - w0
        t = (w - w0) / hw
        s0 = self._edges[idx]
        t2 = t * t
        t3 = t2 * t
        out = (
            (2 * t3 - 3 * t2 + 1) * s0
            + (t3 - 2 * t2 + t) * hw * self._dsdw[idx]
            + (-2 * t3 + 3 * t2) * (s0 + self.step)
            + (t3 - t2) * hw * self._dsdw[idx + 1]
        )
        return np.clip(out, s0, s0 + self.step)


@lru_cache(maxsize=64)
def _intensity(d: int, k: int) -> RadialIntensity:
    return RadialIntensity(ModelParams(d, k))


def cumulative_intensity(s, p: ModelParams):
    """Lambda(s) = omega_{d-k} int_0^s cosh^k sinh^{d-k-1}."""
    return _intensity(p.d, p.k).cumulative(s)


def inverse_cumulative_intensity(target: float, p: ModelParams, tol: float = 1e-12) -> float:
    return _intensity(p.d, p.k).inverse_scalar(target, tol)


# --------------------------------------------------------------------------
# Batches and statistics
# --------------------------------------------------------------------------


@dataclass
class SampleStats:
    """Moments of a batch with plug-in standard errors."""

    n: int
    mean: float
    variance: float
    stderr_mean: float
    stderr_variance: float
    skewness: float = float("nan")
    stderr_skewness: float = float("nan")

    @classmethod
    def from_values(cls, values) -> "SampleStats":
        x = np.asarray(values, dtype=float)
        n = x.size
        if n < 2:
            raise DomainError("need at least two values for sample statistics")
        mean = float(np.mean(x))
        c = x - mean
        m2 = float(np.mean(c ** 2))
        m3 = float(np.mean(c ** 3))
        m4 = float(np.mean(c ** 4))
        m5 = float(np.mean(c ** 5))
        m6 = float(np.mean(c ** 6))
        variance = m2 * n / (n - 1)
        se_var = math.sqrt(max(m4 - m2 * m2, 0.0) / n)
        if m2 > 0:
            skew = m3 / m2 ** 1.5
            se_skew = _skewness_stderr(n, m2, m3, m4, m5, m6)
        else:
            skew, se_skew = 0.0, 0.0
        return cls(
            n=n,
            mean=mean,
            variance=variance,
            stderr_mean=math.sqrt(variance / n),
            stderr_variance=se_var,
            skewness=skew,
            stderr_skewness=se_skew,
        )


def _skewness_stderr(n, m2, m3, m4, m5, m6) -> float:
    # delta method for m3 / m2^{3/2} using the asymptotic covariances of
    # central sample moments
    mu = {0: 1.0, 1: 0.0, 2: m2, 3: m3, 4: m4, 5: m5, 6: m6}

    def cov(a, b):
        return (
            mu[a + b]
            - mu[a] * mu[b]
            - a * mu[a - 1] * mu[b + 1]
            - b * mu[a + 1] * mu[b - 1]
            + a * b * mu[a - 1] * mu[b - 1] * mu[2]
        )

    g2 = -1.5 * m3 * m2 ** -2.5
    g3 = m2 ** -1.5
    var = g2 * g2 * cov(2, 2) + 2 * g2 * g3 * cov(2, 3) + g3 * g3 * cov(3, 3)
    return math.sqrt(max(var, 0.0) / n)


@dataclass
class SampleBatch:
    """Reproducible draws of one random variable."""

    params: ModelParams
    r_or_T: float
    seed: int
    values: np.ndarray
    kind: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def stats(self) -> SampleStats:
        return SampleStats.from_values(self.values)


# --------------------------------------------------------------------------
# Compound Poisson sums
# --------------------------------------------------------------------------


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def _moment(log_jump: Callable, power: int, lo: float, hi: float, p: ModelParams, spec: QuadSpec) -> float:
    """omega_{d-k} int_lo^hi jump(s)^power mu(s) ds."""
    if hi <= lo:
        return 0.0
    lw = log_omega(p.d - p.k)
    jm = p.d - p.k - 1

    def integrand(s):
        if s <= 0.0 and jm:
            return 0.0
        val = power * float(log_jump(np.array([s]))[0])
        if val == -math.inf:
            return 0.0
        return math.exp(val + float(log_mu(s, p.d, p.k)) + lw)

    return quad_finite(integrand, lo, hi, spec)


@dataclass
class _Remainder:
    mean: float
    kappa2: float
    kappa3: float

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Centred draws by inversion of uniforms."""
        if self.kappa2 <= 0.0:
            return np.zeros_like(u)
        if self.kappa3 <= 0.0:
            return math.sqrt(self.kappa2) * stats.norm.ppf(u)
        shape = 4.0 * self.kappa2 ** 3 / self.kappa3 ** 2
        if shape > _NORMAL_SHAPE:
            return math.sqrt(self.kappa2) * stats.norm.ppf(u)
        scale = self.kappa3 / (2.0 * self.kappa2)
        return scale * (stats.gamma.ppf(u, shape) - shape)


def _compound_sums(
    p: ModelParams,
    bound: float,
    log_jump: Callable,
    seed: int,
    n: int,
    exact_points: float,
    threads: Optional[int],
    spec: QuadSpec,
):
    """Per-draw (exact sum, centred remainder) and the bookkeeping around them."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not exact_points > 0:
        raise DomainError("exact_points must be positive")
    intensity = _intensity(p.d, p.k)
    lam_bound = float(intensity.cumulative(bound))
    if lam_bound <= exact_points:
        s_c, lam_c = float(bound), lam_bound
    else:
        lam_c = float(exact_points)
        s_c = min(float(bound), intensity.inverse_scalar(lam_c))
    exact_mean = _moment(log_jump, 1, 0.0, s_c, p, spec)
    rem = _Remainder(
        mean=_moment(log_jump, 1, s_c, bound, p, spec),
        kappa2=_moment(log_jump, 2, s_c, bound, p, spec),
        kappa3=_moment(log_jump, 3, s_c, bound, p, spec),
    )
    intensity._extend(s_c)

    def block(b: int):
        nb = min(BLOCK_SIZE, n - b * BLOCK_SIZE)
        rng = _block_rng(seed, b)
        counts = rng.poisson(lam_c, size=nb)
        u = rng.random(int(counts.sum()))
        u_rem = rng.random(nb)
        pos = intensity.inverse(u * lam_c, s_c)
        with np.errstate(divide="ignore"):
            jumps = np.exp(log_jump(pos))
        owner = np.repeat(np.arange(nb), counts)
        sums = np.bincount(owner, weights=jumps, minlength=nb)
        # keep u_rem bounded away from 0 and 1 for the quantile transform
        u_rem = np.clip(u_rem, 1e-300, 1.0 - 2.0 ** -53)
        return sums, rem.sample(u_rem)

    n_blocks = (n + BLOCK_SIZE - 1) // BLOCK_SIZE
    workers = default_threads() if threads is None else int(threads)
    if workers < 1:
        raise DomainError("threads must be >= 1")
    if workers == 1 or n_blocks == 1:
        parts = [block(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(block, range(n_blocks)))
    exact = np.concatenate([a for a, _ in parts])
    centred_rem = np.concatenate([c for _, c in parts])
    meta = {
        "s_c": s_c,
        "lambda_c": lam_c,
        "lambda_bound": lam_bound,
        "exact_points": exact_points,
        "remainder_mean": rem.mean,
        "remainder_kappa2": rem.kappa2,
        "remainder_kappa3": rem.kappa3,
    }
    return exact, exact_mean, centred_rem, rem.mean, meta


def _check_r(r):
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    return float(r)


def _log_vol(r, k):
    return lambda s: log_slice_volume(s, r, k)


def _log_gr(r, k):
    shift = (k - 1) * r
    return lambda s: log_slice_volume(s, r, k) - shift


def _log_h(k):
    return lambda s: -(k - 1) * _log_cosh(s)


def sample_radial_process(bound: float, p: ModelParams, seed: int, count_override: Optional[int] = None) -> np.ndarray:
    """One realisation of the radial process on [0, bound], sorted.

    ``count_override`` fixes the number of points instead of drawing it from
    Poisson(Lambda(bound)); the positions are then i.i.d. with CDF
    Lambda(s)/Lambda(bound).
    """
    if not bound > 0:
        raise DomainError(f"bound must be positive, got {bound}")
    intensity = _intensity(p.d, p.k)
    lam = float(intensity.cumulative(bound))
    rng = _block_rng(seed, 0)
    count = rng.poisson(lam) if count_override is None else int(count_override)
    if count < 0:
        raise DomainError("count_override must be nonnegative")
    u = rng.random(count)
    return np.sort(intensity.inverse(u * lam, float(bound)))


def sample_F1(
    r: float,
    p: ModelParams,
    seed: int,
    n: int,
    exact_points: float = DEFAULT_EXACT_POINTS,
    threads: Optional[int] = None,
    spec: QuadSpec = DEFAULT_QUAD,
) -> SampleBatch:
    """Draws of F_r^{(1)}, the sum of slice volumes of flats hitting B_r."""
    r = _check_r(r)
    exact, _, rem, rem_mean, meta = _compound_sums(p, r, _log_vol(r, p.k), seed, n, exact_points, threads, spec)
    return SampleBatch(p, r, int(seed), exact + (rem_mean + rem), kind="F1", meta=meta)


def sample_Yr(
    r: float,
    p: ModelParams,
    seed: int,
    n: int,
    exact_points: float = DEFAULT_EXACT_POINTS,
    threads: Optional[int] = None,
    spec: QuadSpec = DEFAULT_QUAD,
) -> SampleBatch:
    """Draws of Y_r = (F_r - E F_r) e^{-(k-1) r}; jumps are scaled in log space."""
    r = _check_r(r)
    exact, exact_mean, rem, _, meta = _compound_sums(p, r, _log_gr(r, p.k), seed, n, exact_points, threads, spec)
    return SampleBatch(p, r, int(seed), (exact - exact_mean) + rem, kind="Yr", meta=meta)


def sample_Z(
    T_trunc: float,
    p: ModelParams,
    seed: int,
    n: int,
    exact_points: float = DEFAULT_EXACT_POINTS,
    threads: Optional[int] = None,
    spec: QuadSpec = DEFAULT_QUAD,
) -> SampleBatch:
    """Draws of Z truncated at T: the sum of cosh^{-(k-1)}(s) over points in [0, T] minus its compensator.

    The L2 error of the truncation is of order e^{-(2k-d-1)T/2}.
    """
    p.require_limit_law()
    T = _check_r(T_trunc)
    exact, _, rem, _, meta = _compound_sums(p, T, _log_h(p.k), seed, n, exact_points, threads, spec)
    # int_0^{s_c} cosh^{-(k-1)} dmu = omega sinh^{d-k}(s_c)/(d-k)
    s_c = meta["s_c"]
    comp = math.exp(log_omega(p.d - p.k) + (p.d - p.k) * _log_sinh_scalar(s_c)) / (p.d - p.k)
    return SampleBatch(p, T, int(seed), (exact - comp) + rem, kind="Z", meta=meta)


def _log_sinh_scalar(s: float) -> float:
    if s <= 0.0:
        return -math.inf
    return s + math.log(-math.expm1(-2.0 * s)) - math.log(2.0)


def ks_distance(values, cdf: Callable) -> float:
    """sup |F_n - F| over the sample, both one-sided gaps included."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0:
        raise DomainError("ks_distance needs at least one value")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


"""Rate exponents for the Kolmogorov distance between Y_r (or F^{(m)}_r) and the limit."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError, RegimeError
from .params import ModelParams, Regime

__all__ = [
    "RateProfile",
    "ChaosOrder",
    "beta",
    "w",
    "w_regime",
    "rate_profile",
    "linear_forms",
    "minmax_solve",
    "minmax_numeric",
    "chaos_variance_order",
    "w_variance_order",
    "rate_curve",
]

MINMAX_TOL = 1e-9


def _require(d: int, k: int) -> ModelParams:
    return ModelParams(d, k).require_limit_law()


def beta(d: int, k: int) -> float:
    """beta_{d,k} = 2(2k - d - 1)/(k + d + 4)."""
    _require(d, k)
    return 2.0 * (2 * k - d - 1) / (k + d + 4)


def alpha_star(d: int, k: int) -> float:
    _require(d, k)
    return 6.0 / (k + d + 4)


def w_regime(d: int, k: int) -> str:
    """Position of 4k relative to 3d+1."""
    _require(d, k)
    lhs, rhs = 4 * k, 3 * d + 1
    if lhs < rhs:
        return "4k<3d+1"
    if lhs == rhs:
        return "4k=3d+1"
    return "4k>3d+1"


def w(d: int, k: int, r):
    """Contribution of the higher chaoses to the rate, piecewise in 4k vs 3d+1."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(~(r_arr > 0)):
        raise DomainError("w needs r > 0")
    reg = w_regime(d, k)
    if reg == "4k<3d+1":
        out = np.exp(-(2 * k - d - 1) * r_arr / 3.0)
    elif reg == "4k=3d+1":
        out = np.cbrt(r_arr) * np.exp(-(2 * k - d - 1) * r_arr / 3.0)
    else:
        out = np.exp(-2.0 * (d - k) * r_arr / 3.0)
    return out.item() if out.ndim == 0 else out


@dataclass(frozen=True)
class RateProfile:
    beta: float
    w_regime: str
    alpha_star: float
    beta_star: float
    k3_log_factor: bool

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "w_regime": self.w_regime,
            "alpha_star": self.alpha_star,
            "beta_star": self.beta_star,
            "k3_log_factor": self.k3_log_factor,
        }


def rate_profile(d: int, k: int) -> RateProfile:
    a, b, _ = minmax_solve(d, k)
    return RateProfile(
        beta=beta(d, k),
        w_regime=w_regime(d, k),
        alpha_star=a,
        beta_star=b,
        k3_log_factor=(k == 3),
    )


def linear_forms(d: int, k: int) -> np.ndarray:
    """Rows (c_alpha, c_beta, c_0) of the four forms c_alpha*alpha + c_beta*beta + c_0."""
    return np.array(
        [
            [d - 1, 1.0, -(k - 1)],
            [d - k + 2, 1.0, -2.0],
            [-(2 * k - d - 1), 2.0, 0.0],
            [0.0, -1.0, 0.0],
        ],
        dtype=float,
    )


def _objective(forms: np.ndarray, alpha: float, beta_: float) -> float:
    return float(np.max(forms[:, 0] * alpha + forms[:, 1] * beta_ + forms[:, 2]))


def minmax_numeric(d: int, k: int):
    """min over alpha, beta >= 0 of the max of the four forms, by vertex enumeration.

    Every vertex of the epigraph sits where two of the conditions
    {form_i = form_j} U {alpha = 0, beta = 0} hold; each pair is solved as a
    2x2 system and the feasible point with the smallest objective wins (ties
    go to the smaller alpha, then beta).
    """
    _require(d, k)
    forms = linear_forms(d, k)
    lines = []
    for i, j in itertools.combinations(range(4), 2):
        diff = forms[i] - forms[j]
        lines.append((diff[0], diff[1], -diff[2]))
    lines.append((1.0, 0.0, 0.0))
    lines.append((0.0, 1.0, 0.0))
    best = None
    for (a1, b1, c1), (a2, b2, c2) in itertools.combinations(lines, 2):
        det = a1 * b2 - a2 * b1
        if abs(det) < 1e-14:
            continue
        alpha = (c1 * b2 - c2 * b1) / det
        beta_ = (a1 * c2 - a2 * c1) / det
        if alpha < -1e-14 or beta_ < -1e-14:
            continue
        alpha, beta_ = max(alpha, 0.0), max(beta_, 0.0)
        cand = (_objective(forms, alpha, beta_), alpha, beta_)
        if best is None or cand[0] < best[0] - 1e-13 or (abs(cand[0] - best[0]) <= 1e-13 and cand[1:] < best[1:]):
            best = cand
    val, alpha, beta_ = best
    return alpha, beta_, val


def minmax_solve(d: int, k: int):
    """(alpha*, beta*, optimum) in closed form, confirmed by ``minmax_numeric``."""
    a = alpha_star(d, k)
    b = beta(d, k)
    opt = -b
    na, nb, nv = minmax_numeric(d, k)
    if max(abs(na - a), abs(nb - b), abs(nv - opt)) > MINMAX_TOL:
        raise ConsistencyError(
            f"min-max for d={d}, k={k}: closed form ({a}, {b}, {opt}) vs numeric ({na}, {nb}, {nv})"
        )
    return a, b, opt


@dataclass(frozen=True)
class ChaosOrder:
    """Growth e^{rate r}, times r when ``log_factor``, with the branch that produced it."""

    branch: str
    rate: float
    log_factor: bool

    def describe(self) -> str:
        pre = "r*" if self.log_factor else ""
        return f"{pre}exp({self.rate:g} r)"

    def as_dict(self) -> dict:
        return {"branch": self.branch, "rate": self.rate, "log_factor": self.log_factor, "order": self.describe()}


def chaos_variance_order(d: int, k: int, i: int) -> ChaosOrder:
    """Growth of the variance of the i-th chaos term, by the sign of 2i(d-k) - (d-1)."""
    if int(i) != i or i < 1:
        raise DomainError(f"i must be a positive integer, got {i}")
    if not 0 <= k <= d - 1:
        raise DomainError(f"requires 0 <= k <= d-1, got d={d}, k={k}")
    s = 2 * i * (d - k) - (d - 1)
    if s > 0:
        return ChaosOrder("2i(d-k)>d-1", float(d - 1), False)
    if s == 0:
        return ChaosOrder("2i(d-k)=d-1", float(d - 1), True)
    return ChaosOrder("2i(d-k)<d-1", float(2 * (d - i * (d - k) - 1)), False)


def w_variance_order(d: int, k: int) -> ChaosOrder:
    """Order of E[W_r^2]; its cube root is w(d, k, r)."""
    reg = w_regime(d, k)
    if reg == "4k<3d+1":
        return ChaosOrder(reg, -float(2 * k - d - 1), False)
    if reg == "4k=3d+1":
        return ChaosOrder(reg, -float(2 * k - d - 1), True)
    return ChaosOrder(reg, -2.0 * (d - k), False)


def rate_curve(d: int, k: int, m, rs) -> list:
    """(r, bound shape) with the unknown constant set to 1.

    r e^{-beta r} for (4, 3), e^{-2r/3} for d >= 12 and k = d-1, e^{-beta r} otherwise.
    """
    p = ModelParams(d, k, m)
    if p.regime is not Regime.NON_GAUSSIAN:
        raise RegimeError(f"requires 2k > d+1, got d={d}, k={k}")
    b = beta(d, k)
    rows = []
    for r in np.asarray(rs, dtype=float).ravel().tolist():
        if r < 0:
            raise DomainError("rate_curve needs r >= 0")
        if (d, k) == (4, 3):
            val = r * math.exp(-b * r)
        elif d >= 12 and k == d - 1:
            val = math.exp(-2.0 * r / 3.0)
        else:
            val = math.exp(-b * r)
        rows.append({"r": float(r), "bound": val})
    return rows

"""Model and inversion parameters shared by every module."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .errors import AdmissibilityError, DomainError, RegimeError


class Regime(str, enum.Enum):
    """Position of 2k relative to d+1."""

    GAUSSIAN = "2k<d+1"
    CRITICAL = "2k=d+1"
    NON_GAUSSIAN = "2k>d+1"


@dataclass(frozen=True)
class ModelParams:
    """Ambient dimension d, flat dimension k and optional intersection order m."""

    d: int
    k: int
    m: Optional[int] = None

    def __post_init__(self):
        for name in ("d", "k"):
            v = getattr(self, name)
            if int(v) != v:
                raise AdmissibilityError(f"{name} must be an integer, got {v}")
        if not 1 <= self.k <= self.d - 1:
            raise AdmissibilityError(
                f"requires 1 <= k <= d-1, got d={self.d}, k={self.k}"
            )
        if self.m is not None:
            if int(self.m) != self.m or self.m < 1:
                raise AdmissibilityError(f"requires m >= 1, got m={self.m}")
            if self.d - self.m * (self.d - self.k) < 0:
                raise AdmissibilityError(
                    f"requires d - m(d-k) >= 0, got d={self.d}, k={self.k}, m={self.m}"
                )

    @property
    def regime(self) -> Regime:
        lhs, rhs = 2 * self.k, self.d + 1
        if lhs < rhs:
            return Regime.GAUSSIAN
        if lhs == rhs:
            return Regime.CRITICAL
        return Regime.NON_GAUSSIAN

    @property
    def codim(self) -> int:
        return self.d - self.k

    @property
    def order(self) -> int:
        return 1 if self.m is None else self.m

    def require_limit_law(self) -> "ModelParams":
        """Raise RegimeError unless the non-Gaussian limit law exists."""
        if self.regime is not Regime.NON_GAUSSIAN:
            raise RegimeError(
                f"requires 2k > d+1, got d={self.d}, k={self.k} (2k={2 * self.k}, d+1={self.d + 1})"
            )
        return self

    def as_dict(self) -> dict:
        return {"d": self.d, "k": self.k, "m": self.m}


@dataclass(frozen=True)
class InversionSpec:
    """Truncation T, grid count M and series order N for density inversion."""

    T: float = 10.0
    M: int = 200
    N: int = 26

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"T must be > 0, got {self.T}")
        if int(self.M) != self.M or self.M < 2:
            raise DomainError(f"M must be an integer >= 2, got {self.M}")
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N}")

    def as_dict(self) -> dict:
        return {"T": self.T, "M": self.M, "N": self.N}


DEFAULT_INVERSION = InversionSpec()


def admissible_pairs(d_max: int, d_min: int = 2):
    """All (d, k) with d_min <= d <= d_max and 2k > d+1, ordered by d then k."""
    out = []
    for d in range(d_min, d_max + 1):
        for k in range(1, d):
            if 2 * k > d + 1:
                out.append(ModelParams(d, k))
    return out

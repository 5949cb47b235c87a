"""Exception hierarchy shared by all modules."""


class HypflatError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HypflatError, ValueError):
    """An argument lies outside the domain of a function."""


class AdmissibilityError(HypflatError, ValueError):
    """The triple (d, k, m) violates 1 <= k <= d-1 or d - m(d-k) >= 0."""


class RegimeError(HypflatError, ValueError):
    """The operation needs a different 2k vs d+1 regime."""


class QuadratureError(HypflatError, ArithmeticError):
    """Adaptive quadrature ran out of subdivisions.

    ``estimate`` and ``abserr`` carry the best value reached and its
    error estimate so callers can decide whether to use it anyway.
    """

    def __init__(self, message, estimate=float("nan"), abserr=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class ConsistencyError(HypflatError, ArithmeticError):
    """Two independent numerical routes disagree beyond tolerance."""

"""Deterministic evaluators for the explicit tail/moment bounds and the
self-normalized statistics they control. All functions are pure."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import DomainError, gamma_fn

SQRT2 = math.sqrt(2.0)
DEFAULT_LOG_FLOOR = math.e**2


@dataclass(frozen=True)
class SelfNormSample:
    """A numerator/normalizer pair (A, B) with an optional norm order r."""
    a: float
    b: float
    r: float = 2.0

    def __post_init__(self):
        if self.b <= 0.0:
            raise DomainError(f"normalizer b must be positive, got {self.b}")
        if not 1.0 < self.r <= 2.0:
            raise DomainError(f"r must lie in (1, 2], got {self.r}")


def thm21_integrand(s: SelfNormSample, y: float) -> float:
    """y/sqrt(B^2+y^2) * exp(A^2 / (2(B^2+y^2))).

    Has mean <= 1 over samples whose exponential moment condition holds for
    all real lambda.
    """
    if y <= 0.0:
        raise DomainError("y must be positive")
    q = s.b * s.b + y * y
    e = 0.5 * s.a * s.a / q + math.log(y) - 0.5 * math.log(q)
    return math.inf if e > 709.0 else math.exp(e)


def mgf_bound(x: float) -> float:
    """sqrt(2) * exp(x^2), the exponential-moment bound."""
    if x <= 0.0:
        raise DomainError("x must be positive")
    return SQRT2 * math.exp(x * x)


def moment_bound_thm21(p: float) -> float:
    """2^(p-1/2) * p * Gamma(p/2), the p-th moment bound for |A|/sqrt(B^2+(EB)^2)."""
    if p <= 0.0:
        raise DomainError("p must be positive")
    return 2.0 ** (p - 0.5) * p * gamma_fn(p / 2.0)


def tail_bound_cor22(x: float) -> float:
    """exp(-x^2/2) for x >= sqrt(2); the trivial bound 1 below the validity region."""
    if x < SQRT2:
        return 1.0
    return math.exp(-0.5 * x * x)


def moment_bound_cor22(p: float) -> float:
    """2^(p/2) + 2^((p-2)/2) * p * Gamma(p/2)."""
    if p <= 0.0:
        raise DomainError("p must be positive")
    return 2.0 ** (p / 2.0) + 2.0 ** ((p - 2.0) / 2.0) * p * gamma_fn(p / 2.0)


def cor22_statistic(s: SelfNormSample, y: float) -> float:
    """|A| / sqrt((B^2 + y)(1 + log(B^2/y + 1)/2)); tail controlled by
    tail_bound_cor22. Invariant under (a, b, sqrt(y)) -> (ta, tb, t*sqrt(y))."""
    if y <= 0.0:
        raise DomainError("y must be positive")
    b2 = s.b * s.b
    return abs(s.a) / math.sqrt((b2 + y) * (1.0 + 0.5 * math.log1p(b2 / y)))


def lil_statistic(a: float, b: float, r: float = 2.0,
                  floor: float = DEFAULT_LOG_FLOOR) -> float:
    """a / {(b v floor) * (loglog(b v floor))^((r-1)/r)} with an iterated-log floor."""
    if floor < math.e**2 - 1e-12:
        raise DomainError("floor must be at least e^2")
    if b <= 0.0:
        raise DomainError("b must be positive")
    if not 1.0 < r <= 2.0:
        raise DomainError(f"r must lie in (1, 2], got {r}")
    bb = max(b, floor)
    return a / (bb * math.log(math.log(bb)) ** ((r - 1.0) / r))


def universal_statistic(s_n: float, truncated_mean_sum: float, v_n: float,
                        floor: float = DEFAULT_LOG_FLOOR) -> float:
    """(S_n - centering) / {(V_n v floor) * (loglog(V_n v floor))^(1/2)}.

    The almost-sure limsup of this statistic is b_lambda when the centering is
    the running truncated-mean sum at levels (-lam*v_n, a_lam*v_n).
    """
    if floor < math.e**2 - 1e-12:
        raise DomainError("floor must be at least e^2")
    if v_n <= 0.0:
        raise DomainError("v_n must be positive")
    vv = max(v_n, floor)
    return (s_n - truncated_mean_sum) / (vv * math.sqrt(math.log(math.log(vv))))

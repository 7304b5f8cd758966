"""Method of mixtures: the mixed supermartingale psi(u, v), the boundary
u = beta_F(v, c) solving psi = c, its large-v asymptotics, and the Gaussian
multivariate mixture statistic and level test.

All heavy arithmetic is done in log scale so that boundary root-finding can
roam over u without overflowing.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, linalg, optimize

from .constants import DomainError

QUAD_REL_TOL = 1e-9


class QuadratureError(RuntimeError):
    pass


class BracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class PointMasses:
    """Finite measure given by atoms (lambda_j, weight_j) with lambda_j > 0."""
    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise DomainError("point-mass measure needs at least one atom")
        for lam, w in self.atoms:
            if lam <= 0.0 or w <= 0.0:
                raise DomainError(f"atoms need positive position and weight, got ({lam}, {w})")

    @property
    def lambda0(self) -> float:
        return max(lam for lam, _ in self.atoms) * (1.0 + 1e-12)

    @property
    def total_mass(self) -> float:
        return math.fsum(w for _, w in self.atoms)

    @property
    def b_f(self) -> float:
        return min(lam for lam, _ in self.atoms)


@dataclass(frozen=True)
class Density:
    """Measure with density f on (0, lambda0); support_low is the essential
    infimum of the support (0 when the density reaches down to 0)."""
    f: Callable[[np.ndarray], np.ndarray]
    lambda0: float
    support_low: float = 0.0

    def __post_init__(self):
        if self.lambda0 <= 0.0:
            raise DomainError("lambda0 must be positive")
        if not 0.0 <= self.support_low < self.lambda0:
            raise DomainError("support_low must lie in [0, lambda0)")

    @property
    def total_mass(self) -> float:
        val, err = integrate.quad(self.f, self.support_low, self.lambda0,
                                  epsabs=0.0, epsrel=1e-11, limit=400)
        if not math.isfinite(val) or val <= 0.0:
            raise QuadratureError(f"density mass integral failed: {val} (err {err})")
        return val

    @property
    def b_f(self) -> float:
        return self.support_low


@dataclass(frozen=True)
class RobbinsSiegmund:
    """The mixing density 1/{lam * log(1/lam) * (loglog(1/lam))^(1+delta)} on
    (0, e^-2); its total mass is (log 2)^(-delta)/delta."""
    delta: float

    def __post_init__(self):
        if self.delta <= 0.0:
            raise DomainError("delta must be positive")

    @property
    def lambda0(self) -> float:
        return math.exp(-2.0)

    @property
    def total_mass(self) -> float:
        return math.log(2.0) ** (-self.delta) / self.delta

    @property
    def b_f(self) -> float:
        return 0.0


MixtureMeasure = PointMasses | Density | RobbinsSiegmund


@dataclass(frozen=True)
class GaussianMixture:
    """Zero-mean Gaussian mixing measure on R^m with precision matrix V."""
    precision: np.ndarray
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.precision, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DomainError("precision must be a square matrix")
        if not np.allclose(v, v.T, rtol=1e-10, atol=1e-12):
            raise DomainError("precision must be symmetric")
        try:
            c = np.linalg.cholesky(v)
        except np.linalg.LinAlgError as exc:
            raise DomainError("precision must be positive definite") from exc
        object.__setattr__(self, "precision", v)
        object.__setattr__(self, "chol", c)

    @property
    def dim(self) -> int:
        return self.precision.shape[0]

    @property
    def log_det_precision(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))


def _max_exponent(u: float, v: float, r: float, lambda0: float) -> float:
    """sup over lambda in (0, lambda0] of lambda*u - lambda^r v / r."""
    def e(lam: float) -> float:
        return lam * u - lam**r * v / r

    if u <= 0.0:
        return 0.0  # approached as lambda -> 0
    lam_star = (u / v) ** (1.0 / (r - 1.0))
    return max(0.0, e(min(lam_star, lambda0)))


def log_psi(u: float, v: float, F: MixtureMeasure, r: float = 2.0) -> float:
    """log of psi(u, v) = int exp(lambda*u - lambda^r v/r) dF(lambda).

    Exact log-sum-exp for point masses; adaptive quadrature (relative target
    1e-9) with an exponent shift for densities. Strictly increasing in u and
    strictly decreasing in v.
    """
    if v <= 0.0:
        raise DomainError("v must be positive")
    if not 1.0 < r <= 2.0:
        raise DomainError(f"r must lie in (1, 2], got {r}")

    if isinstance(F, PointMasses):
        exps = [math.log(w) + lam * u - lam**r * v / r for lam, w in F.atoms]
        m = max(exps)
        return m + math.log(math.fsum(math.exp(e - m) for e in exps))

    if isinstance(F, RobbinsSiegmund):
        return _log_psi_rs(u, v, F, r)

    return _log_psi_density(u, v, F, r)


def _log_psi_rs(u: float, v: float, F: RobbinsSiegmund, r: float) -> float:
    """Substituting w = log(1/lambda) turns the measure into dw/(w (log w)^(1+d))
    on (2, inf); past W with exp(-W)(|u|+v) ~ 0 the exponential factor is 1 to
    machine precision, so the tail mass (log W)^(-d)/d is added in closed form."""
    d = F.delta
    m = _max_exponent(u, v, r, F.lambda0)
    W = max(4.0, math.log(max(abs(u), v, 1.0)) + 40.0)

    def integrand(w):
        lam = np.exp(-w)
        e = lam * u - lam**r * v / r - m
        return np.exp(e) / (w * np.log(w) ** (1.0 + d))

    total = 0.0
    pts = sorted({2.0, min(6.0, W), min(15.0, W), W})
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        val, err = integrate.quad(integrand, a, b, epsabs=0.0,
                                  epsrel=QUAD_REL_TOL * 0.1, limit=400)
        if not math.isfinite(val):
            raise QuadratureError(f"quadrature diverged on [{a}, {b}]")
        total += val
    tail_mass = math.log(W) ** (-d) / d
    total += math.exp(-m) * tail_mass if m < 700.0 else 0.0
    if total <= 0.0:
        raise QuadratureError("psi integral evaluated to a nonpositive value")
    return m + math.log(total)


def _log_psi_density(u: float, v: float, F: Density, r: float) -> float:
    m = _max_exponent(u, v, r, F.lambda0)

    def integrand(lam):
        return np.exp(lam * u - lam**r * v / r - m) * F.f(lam)

    lam_star = (u / v) ** (1.0 / (r - 1.0)) if u > 0 else 0.0
    pts = sorted({F.support_low, F.lambda0,
                  *(x for x in (lam_star,) if F.support_low < x < F.lambda0)})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, err = integrate.quad(integrand, a, b, epsabs=0.0,
                                  epsrel=QUAD_REL_TOL * 0.1, limit=400)
        if not math.isfinite(val):
            raise QuadratureError(f"quadrature diverged on [{a}, {b}]")
        total += val
    if total <= 0.0:
        raise QuadratureError("psi integral evaluated to a nonpositive value")
    return m + math.log(total)


def psi(u: float, v: float, F: MixtureMeasure, r: float = 2.0) -> float:
    """psi(u, v) = int_0^lambda0 exp(lambda*u - lambda^r v/r) dF(lambda)."""
    lp = log_psi(u, v, F, r)
    return math.inf if lp > 709.0 else math.exp(lp)


def boundary(v: float, c: float, F: MixtureMeasure, r: float = 2.0) -> float:
    """The unique u with psi(u, v) = c, by geometric bracket expansion from
    u = 0 followed by Brent's method on log psi; |psi - c| <= 1e-9 * c."""
    if c <= 0.0:
        raise DomainError("c must be positive")
    target = math.log(c)

    def f(u: float) -> float:
        return log_psi(u, v, F, r) - target

    if isinstance(F, PointMasses) and len(F.atoms) == 1:
        lam, w = F.atoms[0]
        return (math.log(c / w) + lam**r * v / r) / lam

    lo, hi = 0.0, 0.0
    f0 = f(0.0)
    if f0 == 0.0:
        return 0.0
    step = max(1.0, v ** (1.0 / r))
    if f0 < 0.0:
        hi = step
        for _ in range(200):
            if f(hi) > 0.0:
                break
            lo, hi = hi, hi * 2.0
        else:
            raise BracketError(f"no upper bracket for boundary(v={v}, c={c})")
    else:
        lo = -step
        for _ in range(200):
            if f(lo) < 0.0:
                break
            hi, lo = lo, lo * 2.0
        else:
            raise BracketError(f"no lower bracket for boundary(v={v}, c={c})")
    u = optimize.brentq(f, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=200)
    if abs(f(u)) > 2e-9:
        raise QuadratureError(f"boundary root residual too large at v={v}, c={c}")
    return float(u)


def rs_asymptotic(v: float, c: float, delta: float) -> float:
    """{2v [loglog v + (3/2 + delta) log3 v + log(c/(2 sqrt(pi)))]}^(1/2),
    the large-v expansion of the Robbins-Siegmund boundary (o(1) dropped)."""
    if v <= math.exp(math.e):
        raise DomainError("v must exceed e^e for log3 v > 0")
    l2 = math.log(math.log(v))
    l3 = math.log(l2)
    inner = l2 + (1.5 + delta) * l3 + math.log(c / (2.0 * math.sqrt(math.pi)))
    return math.sqrt(2.0 * v * inner)


def general_r_asymptotic(v: float, r: float) -> float:
    """v^(1/r) {r loglog v / (r-1)}^((r-1)/r), the general-order boundary growth."""
    if v <= math.e:
        raise DomainError("v must exceed e")
    if not 1.0 < r <= 2.0:
        raise DomainError(f"r must lie in (1, 2], got {r}")
    return v ** (1.0 / r) * (r * math.log(math.log(v)) / (r - 1.0)) ** ((r - 1.0) / r)


def crossing_bound(c: float, F: MixtureMeasure) -> float:
    """min(1, F(0, lambda0)/c): the ever-crossing probability bound."""
    if c <= 0.0:
        raise DomainError("c must be positive")
    return min(1.0, F.total_mass / c)


def mv_statistic(s: Sequence[float], Q: np.ndarray, G: GaussianMixture) -> float:
    """log of the Gaussian-mixture supermartingale:
    (log|V| - log|V+Q|)/2 + s'(V+Q)^{-1} s / 2, via Cholesky solves."""
    s = np.asarray(s, dtype=float).reshape(-1)
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (G.dim, G.dim) or s.shape != (G.dim,):
        raise DomainError("shape mismatch between s, Q and the mixture dimension")
    A = G.precision + Q
    try:
        cf = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError as exc:
        raise DomainError("V + Q is not positive definite") from exc
    log_det_a = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    quad = float(s @ linalg.cho_solve(cf, s))
    return 0.5 * (G.log_det_precision - log_det_a + quad)


def mv_boundary_test(s: Sequence[float], Q: np.ndarray, G: GaussianMixture,
                     c: float) -> bool:
    """True iff s'(V+Q)^{-1}s >= log|V+Q| + 2 log c - log|V|; identical to
    mv_statistic >= log c."""
    if c <= 1.0:
        raise DomainError("c must exceed 1")
    return mv_statistic(s, Q, G) >= math.log(c)


# ---------------------------------------------------------------------------
# JSON (de)serialization. Schema:
#   {"type": "point_masses", "atoms": [[lam, w], ...]}
#   {"type": "density_rs", "delta": d}
#   {"type": "gaussian", "precision": [[...], ...]}
# ---------------------------------------------------------------------------

def measure_to_json(m: MixtureMeasure | GaussianMixture) -> dict:
    if isinstance(m, PointMasses):
        return {"type": "point_masses", "atoms": [list(a) for a in m.atoms]}
    if isinstance(m, RobbinsSiegmund):
        return {"type": "density_rs", "delta": m.delta}
    if isinstance(m, GaussianMixture):
        return {"type": "gaussian", "precision": m.precision.tolist()}
    raise DomainError(f"measure {type(m).__name__} has no JSON form")


def measure_from_json(obj: dict | str) -> MixtureMeasure | GaussianMixture:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("type")
    if kind == "point_masses":
        return PointMasses(atoms=tuple((float(l), float(w)) for l, w in obj["atoms"]))
    if kind == "density_rs":
        return RobbinsSiegmund(delta=float(obj["delta"]))
    if kind == "gaussian":
        return GaussianMixture(precision=np.asarray(obj["precision"], dtype=float))
    raise DomainError(f"unknown measure type {kind!r}")

"""Seeded generators for adapted sequences and discretized continuous
processes, exposing the running state (A_n, B_n^r, V_n^2, truncated-mean sums)
and the exponential supermartingale weights each variant certifies.

Reproducibility: streams are Philox counter-based. A single-path handle uses
the substream SeedSequence(seed, spawn_key=(0, path)); the experiment engine
uses per-chunk substreams SeedSequence(seed, spawn_key=(1, chunk)). Identical
(spec, seed) always reproduces identical draws regardless of scheduling.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import stats

from .constants import DomainError, c_gamma, c_gamma_r, lil_constants

_BUFFER = 1024
LOG_FLOOR = math.e**2


class CertificationError(RuntimeError):
    """lambda outside the range for which the variant's supermartingale holds."""


class UnsupportedVariantError(RuntimeError):
    """The requested quantity has no closed form for this variant."""


def path_rng(seed: int, path: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(0, path))))


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(entropy=seed, spawn_key=(1, chunk))))


# ---------------------------------------------------------------------------
# truncated means of the preset base laws
# ---------------------------------------------------------------------------

def _lognormal_partial_mean(a: float, b: float, mu: float, sigma: float) -> float:
    """E[Z 1(a < Z <= b)] for lognormal Z, 0 <= a < b."""
    if b <= 0.0:
        return 0.0
    a = max(a, 0.0)
    s = math.exp(mu + 0.5 * sigma * sigma)
    hi = stats.norm.cdf((math.log(b) - mu - sigma * sigma) / sigma) if b < math.inf else 1.0
    lo = stats.norm.cdf((math.log(a) - mu - sigma * sigma) / sigma) if a > 0.0 else 0.0
    return s * (hi - lo)


def _pareto_partial_mean(a: float, b: float, shape: float, xm: float) -> float:
    """E[Z 1(a < Z <= b)] for Pareto(shape, x_min=xm)."""
    a = max(a, xm)
    if b <= a:
        return 0.0
    if shape == 1.0:
        return xm * (math.log(b) - math.log(a)) if b < math.inf else math.inf
    c = shape * xm**shape / (shape - 1.0)
    top = 0.0 if b == math.inf and shape > 1.0 else b ** (1.0 - shape)
    if b == math.inf and shape < 1.0:
        return math.inf
    return c * (a ** (1.0 - shape) - top)


def _symmetric_truncated_mean(partial_mean, c: float, d: float) -> float:
    """mu(c, d) for eps*Z with fair signs: positive branch on [max(c,0), d),
    negative branch on (-d, min(0, -(-c))]."""
    pos = 0.5 * partial_mean(max(c, 0.0), d) if d > 0.0 else 0.0
    neg = 0.5 * partial_mean(max(-d, 0.0), -c) if c < 0.0 else 0.0
    return pos - neg


# ---------------------------------------------------------------------------
# variant specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rademacher:
    """Fair +-1 signs; conditionally symmetric, certified for all real lambda."""
    r: float = 2.0
    certification = ("all", math.inf)

    def draw(self, rng, n_lo, n_hi, n_paths):
        return rng.integers(0, 2, size=(n_paths, n_hi - n_lo)).astype(float) * 2.0 - 1.0

    def b_increments(self, d, n_idx):
        return d * d

    def truncated_mean(self, n, c, d):
        if not c < d:
            raise DomainError("need c < d")
        m = 0.0
        if c <= 1.0 < d:
            m += 0.5
        if c <= -1.0 < d:
            m -= 0.5
        return m


@dataclass(frozen=True)
class ScaledSymmetric:
    """d_i = eps_i * Z_i with fair signs and positive i.i.d. scales Z_i."""
    law: str = "lognormal"
    mu: float = 0.0
    sigma: float = 1.0
    shape: float = 2.0
    xm: float = 1.0
    r: float = 2.0
    certification = ("all", math.inf)

    def __post_init__(self):
        if self.law not in ("lognormal", "pareto"):
            raise DomainError(f"unknown scale law {self.law!r}")
        if self.law == "lognormal" and self.sigma <= 0.0:
            raise DomainError("sigma must be positive")
        if self.law == "pareto" and (self.shape <= 0.0 or self.xm <= 0.0):
            raise DomainError("pareto shape and xm must be positive")

    def draw(self, rng, n_lo, n_hi, n_paths):
        shape = (n_paths, n_hi - n_lo)
        eps = rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
        if self.law == "lognormal":
            z = np.exp(self.mu + self.sigma * rng.standard_normal(shape))
        else:
            z = self.xm * rng.random(shape) ** (-1.0 / self.shape)
        return eps * z

    def b_increments(self, d, n_idx):
        return d * d

    def _partial_mean(self, a, b):
        if self.law == "lognormal":
            return _lognormal_partial_mean(a, b, self.mu, self.sigma)
        return _pareto_partial_mean(a, b, self.shape, self.xm)

    def truncated_mean(self, n, c, d):
        if not c < d:
            raise DomainError("need c < d")
        return _symmetric_truncated_mean(self._partial_mean, c, d)


@dataclass(frozen=True)
class BoundedAbove:
    """Supermartingale differences d_i <= M (preset d = M(1 - E), E unit
    exponential, mean 0), with the inflated conditional-variance accumulator
    B_n^2 = (1 + lambda0*M/2) * sum E(d_i^2 | F)."""
    m_bound: float = 1.0
    lambda0: float = 1.0
    r: float = 2.0

    def __post_init__(self):
        if self.m_bound <= 0.0:
            raise DomainError("M must be positive")
        if not 0.0 < self.lambda0 <= 1.0 / self.m_bound:
            raise DomainError("need 0 < lambda0 <= 1/M")

    @property
    def certification(self):
        return ("nonneg", self.lambda0)

    def draw(self, rng, n_lo, n_hi, n_paths):
        e = rng.standard_exponential(size=(n_paths, n_hi - n_lo))
        return self.m_bound * (1.0 - e)

    def cond_second_moment(self, n_idx):
        return np.full_like(np.asarray(n_idx, dtype=float), self.m_bound**2)

    def b_increments(self, d, n_idx):
        scale = (1.0 + 0.5 * self.lambda0 * self.m_bound) * self.m_bound**2
        return np.full_like(np.asarray(d, dtype=float), scale)

    def truncated_mean(self, n, c, d):
        # M(1-E): density exp((x-M)/M)/M on (-inf, M]
        if not c < d:
            raise DomainError("need c < d")
        m = self.m_bound
        # int_c^d x exp((x-M)/M)/M dx = [(x - M) exp((x-M)/M)]_c^d
        def anti(x):
            return 0.0 if x == -math.inf else (x - m) * math.exp((x - m) / m)
        return anti(min(d, m)) - anti(min(c, m))


@dataclass(frozen=True)
class Bernstein:
    """Martingale differences with the Bernstein moment condition
    E(|d|^k | F) <= (k!/2) sigma^2 M^(k-2); preset d = M(E - 1) with E unit
    exponential, sigma^2 = M^2. Certified for 0 <= lambda < 1/M with the
    conditional-variance weight exp{lam*A - lam^2 V^2 / (2(1 - M*lam))}."""
    m_bound: float = 1.0
    r: float = 2.0

    def __post_init__(self):
        if self.m_bound <= 0.0:
            raise DomainError("M must be positive")

    @property
    def certification(self):
        return ("nonneg", 1.0 / self.m_bound)

    def draw(self, rng, n_lo, n_hi, n_paths):
        e = rng.standard_exponential(size=(n_paths, n_hi - n_lo))
        return self.m_bound * (e - 1.0)

    def cond_second_moment(self, n_idx):
        return np.full_like(np.asarray(n_idx, dtype=float), self.m_bound**2)

    def b_increments(self, d, n_idx):
        return np.full_like(np.asarray(d, dtype=float), self.m_bound**2)

    def log_weight(self, lam, a, b_pow_r):
        if lam >= 1.0 / self.m_bound:
            raise CertificationError(f"lambda={lam} >= 1/M for the Bernstein weight")
        return lam * a - lam * lam * b_pow_r / (2.0 * (1.0 - self.m_bound * lam))

    def truncated_mean(self, n, c, d):
        if not c < d:
            raise DomainError("need c < d")
        m = self.m_bound
        # M(E-1): density exp(-(x+M)/M)/M on [-M, inf)
        def anti(x):
            return 0.0 if x == math.inf else -(x + m) * math.exp(-(x + m) / m)
        return anti(max(d, -m)) - anti(max(c, -m))


@dataclass(frozen=True)
class BoundedBelow:
    """Differences d_i >= -M with mean <= 0 (preset d = M(E - 1)), order r
    accumulator B_n^r = r * c_{gamma,r} * sum |d_i|^r; certified on [0, gamma/M]."""
    m_bound: float = 1.0
    gamma: float = 0.5
    r: float = 2.0

    def __post_init__(self):
        if self.m_bound <= 0.0:
            raise DomainError("M must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 1.0 < self.r <= 2.0:
            raise DomainError(f"r must lie in (1, 2], got {self.r}")

    @property
    def certification(self):
        return ("nonneg", self.gamma / self.m_bound)

    @property
    def c_const(self) -> float:
        return c_gamma_r(self.gamma, self.r)

    def draw(self, rng, n_lo, n_hi, n_paths):
        e = rng.standard_exponential(size=(n_paths, n_hi - n_lo))
        return self.m_bound * (e - 1.0)

    def b_increments(self, d, n_idx):
        return self.r * self.c_const * np.abs(d) ** self.r

    def truncated_mean(self, n, c, d):
        return Bernstein(self.m_bound).truncated_mean(n, c, d)


@dataclass(frozen=True)
class BrownianGrid:
    """Standard Brownian motion sampled on a fixed time grid; A = W_t, B^2 = t."""
    times: tuple[float, ...]
    r: float = 2.0
    certification = ("all", math.inf)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(t) == 0 or t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
            raise DomainError("times must be positive and strictly increasing")

    def _dt(self, n_lo, n_hi):
        t = np.concatenate([[0.0], np.asarray(self.times, dtype=float)])
        return np.diff(t)[n_lo:n_hi]

    def draw(self, rng, n_lo, n_hi, n_paths):
        dt = self._dt(n_lo, n_hi)
        return rng.standard_normal((n_paths, n_hi - n_lo)) * np.sqrt(dt)

    def b_increments(self, d, n_idx):
        dts = self._dt(int(np.min(n_idx)) - 1, int(np.max(n_idx)))
        return np.broadcast_to(dts, d.shape)

    def truncated_mean(self, n, c, d):
        dt = self._dt(n - 1, n)[0]
        s = math.sqrt(dt)
        return s * (stats.norm.pdf(c / s) - stats.norm.pdf(d / s))


def geometric_grid(t0: float = 1e-4, rho: float = 1.05, horizon: float = 1e6) -> tuple[float, ...]:
    """t_k = t0 * rho^k clipped at the horizon (the horizon itself is appended)."""
    if t0 <= 0.0 or rho <= 1.0 or horizon <= t0:
        raise DomainError("need t0 > 0, rho > 1, horizon > t0")
    n = int(math.floor(math.log(horizon / t0) / math.log(rho)))
    ts = [t0 * rho**k for k in range(n + 1)]
    if ts[-1] < horizon:
        ts.append(horizon)
    return tuple(ts)


@dataclass(frozen=True)
class MvBrownianGrid:
    """m-dimensional standard Brownian motion on a geometric time grid;
    M_t is the vector state and <M>_t = t * I."""
    dim: int = 2
    t0: float = 1e-4
    rho: float = 1.05
    horizon: float = 1e6
    r: float = 2.0
    certification = ("all", math.inf)

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        geometric_grid(self.t0, self.rho, self.horizon)  # validates

    @property
    def times(self) -> tuple[float, ...]:
        return geometric_grid(self.t0, self.rho, self.horizon)

    def draw(self, rng, n_lo, n_hi, n_paths):
        t = np.concatenate([[0.0], np.asarray(self.times)])
        dt = np.diff(t)[n_lo:n_hi]
        return rng.standard_normal((n_paths, n_hi - n_lo, self.dim)) * np.sqrt(dt)[None, :, None]


def _cx56_probs(n: np.ndarray):
    """Three-point probabilities and the exact zero-mean top atom of the
    heavy-downside counterexample; invalid early indices get X_n = 0."""
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logn = np.log(n)
        p_big = 1.0 / (n * logn**2)
        drift = np.sqrt(logn / n)
        p_plus = 0.5 + drift
        p_minus = 0.5 - drift - p_big
        valid = (n >= 3) & (p_minus >= 0.0) & (p_plus <= 1.0)
        m_n = np.where(valid, (p_plus - p_minus) / (np.sqrt(n) * p_big), 0.0)
    p_plus = np.where(valid, p_plus, 0.0)
    p_minus = np.where(valid, p_minus, 0.0)
    p_big = np.where(valid, p_big, 0.0)
    return p_plus, p_minus, p_big, m_n, valid


def _cx56_draw(rng, n_lo, n_hi, n_paths):
    n = np.arange(n_lo + 1, n_hi + 1, dtype=float)
    p_plus, p_minus, p_big, m_n, valid = _cx56_probs(n)
    u = rng.random((n_paths, n_hi - n_lo))
    small = 1.0 / np.sqrt(n)
    x = np.where(u < p_plus, small, np.where(u < p_plus + p_minus, -small, -m_n))
    return np.where(valid, x, 0.0)


def _cx56_second_moment(n_idx):
    n = np.asarray(n_idx, dtype=float)
    p_plus, p_minus, p_big, m_n, valid = _cx56_probs(n)
    return np.where(valid, (p_plus + p_minus) / n + p_big * m_n**2, 0.0)


@dataclass(frozen=True)
class Counterexample56:
    """Independent three-point variables with exact zero means whose
    uncentered self-normalized sum grows without bound."""
    r: float = 2.0
    certification = None

    def draw(self, rng, n_lo, n_hi, n_paths):
        return _cx56_draw(rng, n_lo, n_hi, n_paths)

    def b_increments(self, d, n_idx):
        return d * d

    def cond_second_moment(self, n_idx):
        return _cx56_second_moment(n_idx)

    def truncated_mean(self, n, c, d):
        p_plus, p_minus, p_big, m_n, valid = _cx56_probs(np.asarray([n], dtype=float))
        if not valid[0]:
            return 0.0
        s = 1.0 / math.sqrt(n)
        m = 0.0
        if c <= s < d:
            m += p_plus[0] * s
        if c <= -s < d:
            m -= p_minus[0] * s
        if c <= -m_n[0] < d:
            m -= p_big[0] * m_n[0]
        return float(m)


@dataclass(frozen=True)
class Counterexample65:
    """Same three-point draws; used with the conditional-variance normalizer
    s_n^2 = sum E(X_i^2 | F) to contrast the two growth diagnostics."""
    r: float = 2.0
    certification = None

    def draw(self, rng, n_lo, n_hi, n_paths):
        return _cx56_draw(rng, n_lo, n_hi, n_paths)

    def b_increments(self, d, n_idx):
        return d * d

    def cond_second_moment(self, n_idx):
        return _cx56_second_moment(n_idx)

    def s_n_sq(self, horizon: int) -> np.ndarray:
        """Cumulative conditional variances for n = 1..horizon."""
        return np.cumsum(self.cond_second_moment(np.arange(1, horizon + 1)))


@dataclass(frozen=True)
class TruncatedCentering:
    """i.i.d. X_i from a base law with analytic truncated means; the running
    centering is n * mu(-lam*v_n, a_lam*v_n) with v_n = V_n (loglog V_n)^(-1/2)."""
    base: str = "normal"
    lam: float = 1.0
    alpha: float = 1.5
    d1: float = 1.0
    d2: float = 1.0
    r: float = 2.0

    def __post_init__(self):
        if self.base not in ("normal", "heavy"):
            raise DomainError(f"unknown base law {self.base!r}")
        if self.lam <= 0.0:
            raise DomainError("lam must be positive")
        if self.base == "heavy":
            if not 0.0 < self.alpha < 1.0:
                raise DomainError("alpha must lie in (0, 1)")
            if self.d1 < 0.0 or self.d2 < 0.0 or self.d1 + self.d2 <= 0.0:
                raise DomainError("need d1, d2 >= 0 with d1 + d2 > 0")

    @property
    def certification(self):
        if self.base == "normal" or self.d1 == self.d2:
            return ("all", math.inf)
        return None

    @property
    def y0(self) -> float:
        """Pareto-tail threshold making the two-sided tail mass exactly 1/2."""
        return (2.0 * (self.d1 + self.d2)) ** (1.0 / self.alpha)

    def draw(self, rng, n_lo, n_hi, n_paths):
        shape = (n_paths, n_hi - n_lo)
        if self.base == "normal":
            return rng.standard_normal(shape)
        y0 = self.y0
        p1 = self.d1 * y0 ** (-self.alpha)
        u = rng.random(shape)
        mag = y0 * rng.random(shape) ** (-1.0 / self.alpha)
        x = np.zeros(shape)
        x = np.where(u < p1, mag, x)
        x = np.where((u >= p1) & (u < 0.5), -mag, x)
        return x

    def b_increments(self, d, n_idx):
        return d * d

    def truncated_mean(self, n, c, d):
        if not c < d:
            raise DomainError("need c < d")
        if self.base == "normal":
            return float(stats.norm.pdf(c) - stats.norm.pdf(d))
        out = 0.0
        if d > 0.0:
            out += self._pareto_piece(max(c, 0.0), d, self.d1)
        if c < 0.0:
            out -= self._pareto_piece(max(-d, 0.0), -c, self.d2)
        return out

    def _pareto_piece(self, a: float, b: float, dcoef: float) -> float:
        """E[|Y| 1(a <= |Y| < b)] restricted to one Pareto tail with
        P(|Y| >= y) = dcoef * y^(-alpha) beyond y0."""
        y0 = self.y0
        a = max(a, y0)
        if b <= a or dcoef == 0.0:
            return 0.0
        al = self.alpha
        top = 0.0 if b == math.inf else b ** (1.0 - al)
        return dcoef * al / (1.0 - al) * (top - a ** (1.0 - al))


@dataclass(frozen=True)
class WeightedIID:
    """S_n = sum w_i Y_i with fair-sign Y_i; weights 'ones' or 'factorial'.
    The factorial preset tracks state rescaled by the latest weight (the
    self-normalized statistic is scale-invariant, raw sums overflow)."""
    weights: str = "ones"
    r: float = 2.0
    certification = ("all", math.inf)

    def __post_init__(self):
        if self.weights not in ("ones", "factorial"):
            raise DomainError(f"unknown weight rule {self.weights!r}")

    def draw(self, rng, n_lo, n_hi, n_paths):
        y = rng.integers(0, 2, size=(n_paths, n_hi - n_lo)).astype(float) * 2.0 - 1.0
        return y  # weights applied by the stepping logic

    def b_increments(self, d, n_idx):
        return d * d

    def truncated_mean(self, n, c, d):
        if self.weights != "ones":
            raise UnsupportedVariantError("no closed-form truncated mean for factorial weights")
        return Rademacher().truncated_mean(n, c, d)


ProcessSpec = (Rademacher | ScaledSymmetric | BoundedAbove | Bernstein | BoundedBelow
               | BrownianGrid | MvBrownianGrid | Counterexample56 | Counterexample65
               | TruncatedCentering | WeightedIID)


# ---------------------------------------------------------------------------
# stepping handle
# ---------------------------------------------------------------------------

@dataclass
class PathState:
    n: int
    a_n: float
    b_pow_r: float
    v_n_sq: float
    mu_sum: float
    extras: dict = field(default_factory=dict)


class ProcessHandle:
    """Single-path stepping state over a spec; draws are buffered in blocks so
    repeated step() calls stay cheap. Not thread-safe; run many handles instead."""

    def __init__(self, spec: ProcessSpec, seed: int, path: int = 0):
        self.spec = spec
        self.seed = int(seed)
        self.path = int(path)
        self.rng = path_rng(self.seed, self.path)
        self.n = 0
        self.a = 0.0
        self.b_pow_r = 0.0
        self.v_sq = 0.0
        self._b_comp = 0.0
        self._v_comp = 0.0
        self._buf: np.ndarray | None = None
        self._buf_pos = 0
        self.increments: list[float] = []
        self._mv_state = (np.zeros(spec.dim), 0.0) if isinstance(spec, MvBrownianGrid) else None
        self._wiid_scaled = (0.0, 0.0) if isinstance(spec, WeightedIID) and spec.weights == "factorial" else None

    def _refill(self):
        hi = self.n + _BUFFER
        if isinstance(self.spec, (BrownianGrid, MvBrownianGrid)):
            hi = min(hi, len(self.spec.times))
            if hi <= self.n:
                raise IndexError("grid exhausted")
        self._buf = self.spec.draw(self.rng, self.n, hi, 1)[0]
        self._buf_pos = 0

    def step(self) -> PathState:
        if self._buf is None or self._buf_pos >= len(self._buf):
            self._refill()
        d = self._buf[self._buf_pos]
        self._buf_pos += 1
        self.n += 1

        if isinstance(self.spec, MvBrownianGrid):
            vec, _ = self._mv_state
            vec = vec + d
            t = self.spec.times[self.n - 1]
            self._mv_state = (vec, t)
            self.v_sq = self._kahan_v(float(np.dot(d, d)))
            self.b_pow_r = t
            return self.state()

        d = float(d)
        if self._wiid_scaled is not None:
            # carry S_n / n! and V_n^2 / (n!)^2
            s, vs = self._wiid_scaled
            s = s / self.n + d
            vs = vs / (self.n * self.n) + d * d
            self._wiid_scaled = (s, vs)
            self.a = s
            self.v_sq = vs
            self.b_pow_r = vs
            self.increments.append(d)
            return self.state()

        self.increments.append(d)
        self.a += d
        binc = float(self.spec.b_increments(np.array([[d]]), np.array([self.n]))[0, 0])
        self.b_pow_r = self._kahan_b(binc)
        self.v_sq = self._kahan_v(d * d)
        return self.state()

    def _kahan_b(self, inc: float) -> float:
        y = inc - self._b_comp
        t = self.b_pow_r + y
        self._b_comp = (t - self.b_pow_r) - y
        return t

    def _kahan_v(self, inc: float) -> float:
        y = inc - self._v_comp
        t = self.v_sq + y
        self._v_comp = (t - self.v_sq) - y
        return t

    def state(self) -> PathState:
        extras: dict = {}
        if self._mv_state is not None:
            vec, t = self._mv_state
            extras = {"m_vec": vec.copy(), "t": t}
        if self._wiid_scaled is not None:
            extras = {"scaled_by": "n_factorial"}
        return PathState(n=self.n, a_n=self.a if self._mv_state is None else float(self._mv_state[0][0]),
                         b_pow_r=self.b_pow_r, v_n_sq=self.v_sq,
                         mu_sum=self.mu_sum(), extras=extras)

    def mu_sum(self) -> float:
        """n * mu(-lam*v_n, a_lam*v_n) for the truncated-centering variant, 0 otherwise."""
        if not isinstance(self.spec, TruncatedCentering) or self.n == 0:
            return 0.0
        k = lil_constants(self.spec.lam)
        v = max(math.sqrt(self.v_sq), LOG_FLOOR)
        v_n = v * math.log(math.log(v)) ** (-0.5)
        mu = self.spec.truncated_mean(self.n, -self.spec.lam * v_n, k.a_lambda * v_n)
        return self.n * mu


def make_process(spec: ProcessSpec, seed: int, path: int = 0) -> ProcessHandle:
    """Deterministic single-path generator; equal (spec, seed, path) gives
    identical streams."""
    return ProcessHandle(spec, seed, path)


def check_lambda(spec: ProcessSpec, lam: float) -> None:
    cert = spec.certification
    if cert is None:
        raise CertificationError(f"{type(spec).__name__} carries no supermartingale certification")
    kind, lam0 = cert
    if kind == "all":
        return
    if lam < 0.0 or lam > lam0:
        raise CertificationError(
            f"lambda={lam} outside certified range [0, {lam0}] for {type(spec).__name__}")


def log_supermartingale(spec: ProcessSpec, lam: float, a: float, b_pow_r: float) -> float:
    """Log of the certified exponential supermartingale at the given state."""
    check_lambda(spec, lam)
    if hasattr(spec, "log_weight"):
        return spec.log_weight(lam, a, b_pow_r)
    r = spec.r
    return lam * a - lam**r * b_pow_r / r


def exp_supermartingale_value(handle: ProcessHandle, lam: float) -> float:
    """exp(lam*A_n - (lam^r) B_n^r / r) (variant-specific weight where the
    certification requires one), evaluated from the handle's current state."""
    lw = log_supermartingale(handle.spec, lam, handle.a, handle.b_pow_r)
    return math.inf if lw > 709.0 else math.exp(lw)


def truncated_supermartingale_value(handle: ProcessHandle, gammas, lams,
                                    r: float = 2.0) -> float:
    """Running product exp{sum_i (Y_i - mu_i - lam_i^(-1) |Y_i|^r)} with
    F_{i-1}-measurable truncation parameters; mu_i truncates Y to
    [-gamma_i, lam_i^(1/(r-1))). Parameters may be scalars or sequences."""
    n = handle.n
    gam = np.broadcast_to(np.asarray(gammas, dtype=float), (n,))
    lamv = np.broadcast_to(np.asarray(lams, dtype=float), (n,))
    total = 0.0
    for i in range(n):
        g, l = float(gam[i]), float(lamv[i])
        if not 0.0 <= g < 1.0:
            raise DomainError(f"gamma_{i+1}={g} outside [0, 1)")
        cap = 1.0 / c_gamma(g) if r == 2.0 else 1.0 / c_gamma_r(g, r)
        if not 0.0 < l <= cap * (1.0 + 1e-12):
            raise DomainError(f"lambda_{i+1}={l} exceeds 1/c_(gamma,r)={cap}")
        y = handle.increments[i]
        upper = l if r == 2.0 else l ** (1.0 / (r - 1.0))
        mu = handle.spec.truncated_mean(i + 1, -g, upper)
        total += y - mu - abs(y) ** r / l
    return math.inf if total > 709.0 else math.exp(total)


# ---------------------------------------------------------------------------
# JSON serialization of specs
# ---------------------------------------------------------------------------

_VARIANTS = {
    "rademacher": Rademacher,
    "scaled_symmetric": ScaledSymmetric,
    "bounded_above": BoundedAbove,
    "bernstein": Bernstein,
    "bounded_below": BoundedBelow,
    "brownian_grid": BrownianGrid,
    "mv_brownian_grid": MvBrownianGrid,
    "counterexample56": Counterexample56,
    "counterexample65": Counterexample65,
    "truncated_centering": TruncatedCentering,
    "weighted_iid": WeightedIID,
}


def spec_to_json(spec: ProcessSpec) -> dict:
    name = {v: k for k, v in _VARIANTS.items()}[type(spec)]
    out = {"variant": name}
    for f_name in spec.__dataclass_fields__:
        val = getattr(spec, f_name)
        out[f_name] = list(val) if isinstance(val, tuple) else val
    return out


def spec_from_json(obj: dict | str) -> ProcessSpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    obj = dict(obj)
    name = obj.pop("variant", None)
    cls = _VARIANTS.get(name)
    if cls is None:
        raise DomainError(f"unknown process variant {name!r}")
    if cls is BrownianGrid and "times" in obj:
        obj["times"] = tuple(float(t) for t in obj["times"])
    try:
        return cls(**obj)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {name}: {exc}") from exc

"""Seeded Monte Carlo verification engine.

Estimates supermartingale means, tail probabilities, moments, boundary
crossing frequencies, and iterated-logarithm running statistics over many
simulated paths, and compares them to the analytic bounds.

Determinism contract: paths are partitioned into fixed chunks whose sizes
depend only on (paths, horizon); chunk i draws from the substream
SeedSequence(seed, spawn_key=(1, i)) and partial results are combined in
chunk order with exact (fsum) accumulation. Reports are therefore identical
for any worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np
from scipy import stats
from scipy.interpolate import PchipInterpolator

from .constants import DomainError, lil_constants
from .bounds import (DEFAULT_LOG_FLOOR, SQRT2, moment_bound_cor22,
                     moment_bound_thm21, tail_bound_cor22)
from .mixture import (BracketError, GaussianMixture, MixtureMeasure, boundary,
                      crossing_bound)
from .processes import (Bernstein, BoundedBelow, Counterexample56,
                        Counterexample65, MvBrownianGrid, ProcessSpec,
                        TruncatedCentering, check_lambda, chunk_rng,
                        spec_to_json)

_BLOCK = 32768
_MAX_CHUNK_PATHS = 16384
_TARGET_CELLS = 4_194_304


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ProcessSpec
    seed: int
    paths: int
    horizon: int
    checkpoints: tuple[int, ...] = ()
    lambda_grid: tuple[float, ...] = ()
    x_grid: tuple[float, ...] = ()
    p_list: tuple[float, ...] = ()
    statistic: str = "auto"
    se_slack: float = 3.0

    def __post_init__(self):
        if self.paths < 1 or self.horizon < 1:
            raise DomainError("paths and horizon must be positive")
        cks = tuple(int(c) for c in self.checkpoints)
        if list(cks) != sorted(set(cks)):
            raise DomainError("checkpoints must be sorted and distinct")
        if cks and (cks[0] < 1 or cks[-1] > self.horizon):
            raise DomainError("checkpoints must lie in [1, horizon]")
        object.__setattr__(self, "checkpoints", cks)
        if self.se_slack < 0.0:
            raise DomainError("se_slack must be nonnegative")


@dataclass(frozen=True)
class BoundReport:
    label: str
    analytic_bound: float
    estimate: float
    std_error: float
    paths: int
    passed: bool
    extra: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _one_sided(label, bound, estimate, se, paths, k, extra=None) -> BoundReport:
    return BoundReport(label=label, analytic_bound=bound, estimate=estimate,
                       std_error=se, paths=paths,
                       passed=bool(estimate - k * se <= bound), extra=extra)


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("SELFNORM_WORKERS", "1"))
    if workers < 1:
        raise DomainError("workers must be >= 1")
    return workers


def _chunk_layout(paths: int, horizon: int) -> list[int]:
    """Fixed chunk sizes; a pure function of (paths, horizon) so results do
    not depend on the worker count."""
    size = min(paths, max(1, _TARGET_CELLS // max(horizon, 1)), _MAX_CHUNK_PATHS)
    out = [size] * (paths // size)
    if paths % size:
        out.append(paths % size)
    return out


def _map_chunks(fn, n_chunks: int, workers: int) -> list:
    if workers == 1 or n_chunks == 1:
        return [fn(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(n_chunks)))


def _scan(spec, rng, n_paths, horizon, visit):
    """Block-scan one chunk: visit(n_idx, d, ca, cb, cv) receives the global
    step indices of a block plus cumulative A, B^r and V^2 arrays."""
    a = np.zeros(n_paths)
    b = np.zeros(n_paths)
    v = np.zeros(n_paths)
    for lo in range(0, horizon, _BLOCK):
        hi = min(lo + _BLOCK, horizon)
        d = spec.draw(rng, lo, hi, n_paths)
        n_idx = np.arange(lo + 1, hi + 1)
        ca = a[:, None] + np.cumsum(d, axis=1)
        cb = b[:, None] + np.cumsum(spec.b_increments(d, n_idx), axis=1)
        cv = v[:, None] + np.cumsum(d * d, axis=1)
        visit(n_idx, d, ca, cb, cv)
        a = ca[:, -1].copy()
        b = cb[:, -1].copy()
        v = cv[:, -1].copy()


def _fsum_cells(parts: list[np.ndarray]) -> np.ndarray:
    """Exact elementwise sum over per-chunk partial arrays."""
    flat = [p.reshape(-1) for p in parts]
    out = np.array([math.fsum(f[j] for f in flat) for j in range(flat[0].size)])
    return out.reshape(parts[0].shape)


def _log_weight_vec(spec, lam, a, b_pow_r):
    if isinstance(spec, Bernstein):
        return lam * a - lam * lam * b_pow_r / (2.0 * (1.0 - spec.m_bound * lam))
    return lam * a - lam ** spec.r * b_pow_r / spec.r


def _mean_se(s1: float, s2: float, n: int) -> tuple[float, float]:
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


def _binom_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


# ---------------------------------------------------------------------------
# supermartingale means
# ---------------------------------------------------------------------------

def check_supermartingale_mean(cfg: ExperimentConfig,
                               workers: int | None = None) -> list[BoundReport]:
    """Empirical mean of the certified exponential supermartingale at each
    (lambda, checkpoint); pass iff mean - k*SE <= 1."""
    workers = resolve_workers(workers)
    lams = cfg.lambda_grid or (0.5,)
    cks = cfg.checkpoints or (cfg.horizon,)
    for lam in lams:
        check_lambda(cfg.spec, lam)
    layout = _chunk_layout(cfg.paths, cfg.horizon)
    L, K = len(lams), len(cks)

    def chunk(ci):
        rng = chunk_rng(cfg.seed, ci)
        s1 = np.zeros((L, K))
        s2 = np.zeros((L, K))

        def visit(n_idx, d, ca, cb, cv):
            for k, n in enumerate(cks):
                if not n_idx[0] <= n <= n_idx[-1]:
                    continue
                col = n - n_idx[0]
                a, b = ca[:, col], cb[:, col]
                for j, lam in enumerate(lams):
                    w = np.exp(np.minimum(_log_weight_vec(cfg.spec, lam, a, b), 709.0))
                    s1[j, k] += float(np.sum(w))
                    s2[j, k] += float(np.sum(w * w))

        _scan(cfg.spec, rng, layout[ci], cfg.horizon, visit)
        return s1, s2

    parts = _map_chunks(chunk, len(layout), workers)
    s1 = _fsum_cells([p[0] for p in parts])
    s2 = _fsum_cells([p[1] for p in parts])
    name = type(cfg.spec).__name__
    reports = []
    for j, lam in enumerate(lams):
        for k, n in enumerate(cks):
            mean, se = _mean_se(s1[j, k], s2[j, k], cfg.paths)
            if lam == 0.0:
                mean, se = 1.0, 0.0
            reports.append(_one_sided(f"supermg_mean {name} lambda={lam} n={n}",
                                      1.0, mean, se, cfg.paths, cfg.se_slack))
    return reports


# ---------------------------------------------------------------------------
# section-2 tail and moment bounds
# ---------------------------------------------------------------------------

def _final_state(cfg, workers):
    """Per-path (A, B^r, V^2) at the horizon, assembled in chunk order."""
    layout = _chunk_layout(cfg.paths, cfg.horizon)

    def chunk(ci):
        rng = chunk_rng(cfg.seed, ci)
        out = {}

        def visit(n_idx, d, ca, cb, cv):
            if n_idx[-1] == cfg.horizon:
                out["fin"] = (ca[:, -1].copy(), cb[:, -1].copy(), cv[:, -1].copy())

        _scan(cfg.spec, rng, layout[ci], cfg.horizon, visit)
        return out["fin"]

    parts = _map_chunks(chunk, len(layout), resolve_workers(workers))
    a = np.concatenate([p[0] for p in parts])
    b = np.concatenate([p[1] for p in parts])
    v = np.concatenate([p[2] for p in parts])
    return a, b, v


def validate_tail_bound(cfg: ExperimentConfig, y: float,
                        workers: int | None = None) -> list[BoundReport]:
    """Empirical tail of |A|/sqrt((B^2+y)(1+log(1+B^2/y)/2)) at the horizon
    versus exp(-x^2/2), for each x >= sqrt(2) in the grid."""
    if y <= 0.0:
        raise DomainError("y must be positive")
    cert = cfg.spec.certification
    if cert is None or cert[0] != "all":
        raise DomainError("tail bound requires certification over all real lambda")
    a, b, _ = _final_state(cfg, workers)
    b2 = b if cfg.spec.r == 2.0 else b ** (2.0 / cfg.spec.r)
    stat = np.abs(a) / np.sqrt((b2 + y) * (1.0 + 0.5 * np.log1p(b2 / y)))
    reports = []
    for x in (cfg.x_grid or (SQRT2, 2.0, 2.5, 3.0)):
        if x < SQRT2:
            raise DomainError(f"tail grid point {x} below sqrt(2)")
        p_hat = float(np.count_nonzero(stat >= x)) / cfg.paths
        reports.append(_one_sided(f"tail x={x:g} y={y:g}", tail_bound_cor22(x),
                                  p_hat, _binom_se(p_hat, cfg.paths),
                                  cfg.paths, cfg.se_slack))
    return reports


def validate_moment_bound(cfg: ExperimentConfig, p_list=None,
                          workers: int | None = None) -> list[BoundReport]:
    """Empirical p-th moments of |A|/sqrt(B^2+(EB)^2) and of the two-sided
    normalized statistic, against their analytic bounds. EB is the plug-in
    empirical mean of B over the same paths (bias noted in the label)."""
    cert = cfg.spec.certification
    if cert is None or cert[0] != "all":
        raise DomainError("moment bounds require certification over all real lambda")
    a, b, _ = _final_state(cfg, workers)
    b2 = b if cfg.spec.r == 2.0 else b ** (2.0 / cfg.spec.r)
    bb = np.sqrt(b2)
    eb = math.fsum(bb.tolist()) / cfg.paths
    y = eb * eb
    s_thm = np.abs(a) / np.sqrt(b2 + y)
    s_cor = np.abs(a) / np.sqrt((b2 + y) * (1.0 + 0.5 * np.log1p(b2 / y)))
    reports = []
    for p in (p_list or cfg.p_list or (1.0, 2.0, 4.0)):
        for tag, s, bound in (("ratio_moment", s_thm, moment_bound_thm21(p)),
                              ("normalized_moment", s_cor, moment_bound_cor22(p))):
            w = s ** p
            mean, se = _mean_se(float(np.sum(w)), float(np.sum(w * w)), cfg.paths)
            reports.append(_one_sided(
                f"{tag} p={p:g} (plug-in EB={eb:.6g})", bound, mean, se,
                cfg.paths, cfg.se_slack))
    return reports


# ---------------------------------------------------------------------------
# boundary crossing
# ---------------------------------------------------------------------------

def _boundary_interpolant(F: MixtureMeasure, c: float, r: float,
                          v_lo: float, v_hi: float, nodes: int = 160):
    vg = np.geomspace(v_lo, v_hi, nodes)
    bg = np.array([boundary(v, c, F, r) for v in vg])
    interp = PchipInterpolator(np.log(vg), bg, extrapolate=False)

    def beta(v):
        out = interp(np.log(v))
        if np.any(np.isnan(out)):
            raise BracketError("realized B^r left the precomputed boundary grid")
        return out

    return beta


def crossing_frequency(cfg: ExperimentConfig, mixture=None, c: float = None,
                       workers: int | None = None) -> list[BoundReport]:
    """Fraction of paths on which the mixture boundary is ever crossed by each
    checkpoint, with a binomial SE.

    Scalar mixtures test {A_n >= beta_F(B_n^r, c)}; pass iff freq - k*SE <=
    total_mass/c. A Gaussian mixture (with an MvBrownianGrid spec) tests the
    quadratic-form crossing rule, whose limit frequency for the continuous
    process is exactly 1/c; here the checkpoints are time values on the grid.
    """
    if c is None or c <= 0.0:
        raise DomainError("c must be positive")
    workers = resolve_workers(workers)
    if isinstance(mixture, GaussianMixture):
        return _crossing_gaussian(cfg, mixture, c, workers)

    cert = cfg.spec.certification
    if cert is None:
        raise DomainError("crossing test requires a certified spec")
    if mixture.lambda0 > cert[1] * (1.0 + 1e-12):
        raise DomainError("mixture support exceeds the certified lambda range")
    cks = cfg.checkpoints or (cfg.horizon,)
    layout = _chunk_layout(cfg.paths, cfg.horizon)
    beta = _boundary_interpolant(mixture, c, cfg.spec.r,
                                 1e-4, 16.0 * cfg.horizon)

    def chunk(ci):
        rng = chunk_rng(cfg.seed, ci)
        P = layout[ci]
        crossed = np.zeros(P, dtype=bool)
        counts = np.zeros(len(cks), dtype=np.int64)

        def visit(n_idx, d, ca, cb, cv):
            hit = ca >= beta(np.maximum(cb, 1e-4))
            ever = np.logical_or.accumulate(hit, axis=1)
            for k, n in enumerate(cks):
                if n_idx[0] <= n <= n_idx[-1]:
                    counts[k] += int(np.count_nonzero(crossed | ever[:, n - n_idx[0]]))
            crossed[:] |= ever[:, -1]

        _scan(cfg.spec, rng, P, cfg.horizon, visit)
        return counts

    parts = _map_chunks(chunk, len(layout), workers)
    totals = np.sum(parts, axis=0)
    bound = crossing_bound(c, mixture)
    reports = []
    for k, n in enumerate(cks):
        p_hat = float(totals[k]) / cfg.paths
        reports.append(_one_sided(f"crossing n<={n} c={c:g}", bound, p_hat,
                                  _binom_se(p_hat, cfg.paths), cfg.paths,
                                  cfg.se_slack))
    return reports


def _crossing_gaussian(cfg, G: GaussianMixture, c, workers):
    spec = cfg.spec
    if not isinstance(spec, MvBrownianGrid) or spec.dim != G.dim:
        raise DomainError("Gaussian crossing test needs an MvBrownianGrid of matching dim")
    if c <= 1.0:
        raise DomainError("c must exceed 1")
    times = np.asarray(spec.times)
    n_steps = len(times)
    ck_times = tuple(float(t) for t in cfg.checkpoints) or (float(times[-1]),)
    ck_idx = [int(np.searchsorted(times, t, side="right")) - 1 for t in ck_times]
    if any(i < 0 for i in ck_idx):
        raise DomainError("checkpoint time precedes the first grid point")
    w, U = np.linalg.eigh(G.precision)
    ld0 = float(np.sum(np.log(w)))
    log_c = math.log(c)
    layout = _chunk_layout(cfg.paths, n_steps * spec.dim)

    def chunk(ci):
        rng = chunk_rng(cfg.seed, ci)
        P = layout[ci]
        d = spec.draw(rng, 0, n_steps, P)             # (P, T, m)
        m_path = np.cumsum(d, axis=1)
        proj = m_path @ U                              # rotate into eigenbasis
        quad = np.sum(proj * proj / (w[None, None, :] + times[None, :, None]), axis=2)
        logdet = np.sum(np.log(w[None, :] + times[:, None]), axis=1)
        stat = 0.5 * (ld0 - logdet[None, :] + quad)
        ever = np.logical_or.accumulate(stat >= log_c, axis=1)
        return np.array([int(np.count_nonzero(ever[:, i])) for i in ck_idx],
                        dtype=np.int64)

    parts = _map_chunks(chunk, len(layout), workers)
    totals = np.sum(parts, axis=0)
    reports = []
    for k, t in enumerate(ck_times):
        p_hat = float(totals[k]) / cfg.paths
        reports.append(_one_sided(f"mv_crossing t<={t:g} c={c:g}", 1.0 / c,
                                  p_hat, _binom_se(p_hat, cfg.paths),
                                  cfg.paths, cfg.se_slack))
    return reports


# ---------------------------------------------------------------------------
# iterated-logarithm running statistics
# ---------------------------------------------------------------------------

def _vector_mu(spec: TruncatedCentering, v_n: np.ndarray) -> np.ndarray:
    """Vectorized per-step truncated mean mu(-lam*v_n, a_lam*v_n)."""
    k = lil_constants(spec.lam)
    c = -spec.lam * v_n
    d = k.a_lambda * v_n
    if spec.base == "normal":
        return stats.norm.pdf(c) - stats.norm.pdf(d)

    def piece(a, b, dcoef):
        y0 = spec.y0
        a = np.maximum(a, y0)
        al = spec.alpha
        val = dcoef * al / (1.0 - al) * (b ** (1.0 - al) - a ** (1.0 - al))
        return np.where(b > a, val, 0.0)

    return piece(np.zeros_like(d), d, spec.d1) - piece(np.zeros_like(c), -c, spec.d2)


def _loglog(x: np.ndarray, floor: float) -> np.ndarray:
    return np.log(np.log(np.maximum(x, floor)))


def _select_statistic(cfg):
    """Return (kind, normalizer_power) for the lil statistic family."""
    if cfg.statistic != "auto":
        return cfg.statistic
    if isinstance(cfg.spec, Counterexample65):
        return "conditional_variance"
    if isinstance(cfg.spec, Counterexample56):
        return "uncentered"
    if isinstance(cfg.spec, TruncatedCentering):
        return "universal"
    return "lil"


def lil_track(cfg: ExperimentConfig, margin: float = 0.15,
              workers: int | None = None) -> dict:
    """Running maxima of the selected normalized statistic.

    Statistics ('auto' resolves by variant):
      lil      A_n / {B_n (loglog B_n)^{(r-1)/r}},  B_n = (B_n^r)^{1/r}
      uncentered  S_n / {(V_n v e^2) (loglog(V_n v e^2))^{1/2}} (no guard;
                  used for laws whose V_n stays below e^2 forever)
      conditional_variance   S_n / {s_n (loglog s_n)^{1/2}}, deterministic s_n
      universal  (S_n - centering_n) / {V_n (loglog V_n)^{1/2}}

    Values are recorded only once the normalizer reaches e^2 (except for the
    'uncentered' kind, which floors the normalizer instead). Returns
    per-path running maxima and point values at each checkpoint, medians,
    and the fraction of paths ever exceeding the limsup bound * (1+margin).
    """
    workers = resolve_workers(workers)
    kind = _select_statistic(cfg)
    cks = cfg.checkpoints or (cfg.horizon,)
    r = cfg.spec.r
    floor = DEFAULT_LOG_FLOOR
    if kind == "lil":
        limsup_bound = (r / (r - 1.0)) ** ((r - 1.0) / r)
    else:
        limsup_bound = (lil_constants(cfg.spec.lam).b_lambda
                        if kind == "universal" else math.inf)
    s_det = (np.sqrt(np.maximum(cfg.spec.s_n_sq(cfg.horizon), 0.0))
             if kind == "conditional_variance" else None)
    layout = _chunk_layout(cfg.paths, cfg.horizon)

    def stat_block(n_idx, ca, cb, cv):
        if kind == "conditional_variance":
            s = s_det[n_idx - 1][None, :]
            den = np.maximum(s, floor) * np.sqrt(_loglog(s, floor))
            val = ca / den
            guard = s >= floor
        elif kind == "uncentered":
            vn = np.sqrt(cv)
            val = ca / (np.maximum(vn, floor) * np.sqrt(_loglog(vn, floor)))
            guard = np.ones_like(val, dtype=bool)
        elif kind == "universal":
            vn = np.sqrt(cv)
            ll = _loglog(vn, floor)
            v_small = np.maximum(vn, floor) * ll ** -0.5
            mu = _vector_mu(cfg.spec, v_small) * n_idx[None, :]
            val = (ca - mu) / (np.maximum(vn, floor) * np.sqrt(ll))
            guard = vn >= floor
        else:
            bn = cb if r == 2.0 else np.abs(cb)
            bn = np.maximum(bn, 0.0) ** (1.0 / r)
            val = ca / (np.maximum(bn, floor) * _loglog(bn, floor) ** ((r - 1.0) / r))
            guard = bn >= floor
        return np.where(guard, val, -np.inf)

    def chunk(ci):
        rng = chunk_rng(cfg.seed, ci)
        P = layout[ci]
        run_max = np.full(P, -np.inf)
        maxima = np.full((P, len(cks)), -np.inf)
        values = np.full((P, len(cks)), np.nan)
        exceeded = np.zeros(P, dtype=bool)

        def visit(n_idx, d, ca, cb, cv):
            nonlocal run_max
            val = stat_block(n_idx, ca, cb, cv)
            cmax = np.maximum.accumulate(np.column_stack([run_max, val]), axis=1)[:, 1:]
            for k, n in enumerate(cks):
                if n_idx[0] <= n <= n_idx[-1]:
                    col = n - n_idx[0]
                    maxima[:, k] = cmax[:, col]
                    values[:, k] = val[:, col]
            run_max = cmax[:, -1]
            if math.isfinite(limsup_bound):
                exceeded[:] |= run_max > limsup_bound * (1.0 + margin)

        _scan(cfg.spec, rng, P, cfg.horizon, visit)
        return maxima, values, exceeded

    parts = _map_chunks(chunk, len(layout), workers)
    maxima = np.concatenate([p[0] for p in parts])
    values = np.concatenate([p[1] for p in parts])
    exceeded = np.concatenate([p[2] for p in parts])
    return {
        "statistic": kind,
        "checkpoints": list(cks),
        "running_max": maxima,
        "value": values,
        "median_running_max": np.median(maxima, axis=0).tolist(),
        "median_value": np.median(values, axis=0).tolist(),
        "limsup_bound": limsup_bound,
        "margin": margin,
        "frac_exceeding": float(np.count_nonzero(exceeded)) / cfg.paths,
    }


def cluster_set_diagnostic(cfg: ExperimentConfig, bins: int = 41,
                           workers: int | None = None) -> dict:
    """Occupancy histogram of the lil statistic over [-2, 2], across all
    recorded steps and paths; 'late' restricts to the second half of the
    horizon. Diagnostic only (the cluster set fills an interval a.s., so
    interior bins should all be visited)."""
    workers = resolve_workers(workers)
    edges = np.linspace(-2.0, 2.0, bins + 1)
    floor = DEFAULT_LOG_FLOOR
    r = cfg.spec.r
    layout = _chunk_layout(cfg.paths, cfg.horizon)
    half = cfg.horizon // 2

    def chunk(ci):
        rng = chunk_rng(cfg.seed, ci)
        all_c = np.zeros(bins, dtype=np.int64)
        late_c = np.zeros(bins, dtype=np.int64)

        def visit(n_idx, d, ca, cb, cv):
            bn = np.maximum(cb, 0.0) ** (1.0 / r)
            val = ca / (np.maximum(bn, floor) * _loglog(bn, floor) ** ((r - 1.0) / r))
            ok = bn >= floor
            all_c[:] += np.histogram(val[ok], bins=edges)[0]
            late = ok & (n_idx[None, :] > half)
            late_c[:] += np.histogram(val[late], bins=edges)[0]

        _scan(cfg.spec, rng, layout[ci], cfg.horizon, visit)
        return all_c, late_c

    parts = _map_chunks(chunk, len(layout), workers)
    return {
        "edges": edges.tolist(),
        "counts": np.sum([p[0] for p in parts], axis=0).tolist(),
        "late_counts": np.sum([p[1] for p in parts], axis=0).tolist(),
    }


def sup_moment_estimate(cfg: ExperimentConfig, p: float | None = None,
                        alpha: float | None = None,
                        workers: int | None = None) -> BoundReport:
    """Empirical E(sup_n statistic)^p, or E sup_n exp(alpha * statistic^2)
    when alpha is given; the statistic uses the squared-normalizer iterated
    logarithm. The analytic constant is existence-only, so the pass rule is a
    stability check: the estimate at the half horizon must be within 10% of
    the estimate at the full horizon."""
    if (p is None) == (alpha is None):
        raise DomainError("give exactly one of p, alpha")
    if alpha is not None and not 0.0 < alpha < 0.5:
        raise DomainError("alpha must lie in (0, 1/2)")
    workers = resolve_workers(workers)
    r = cfg.spec.r
    floor = DEFAULT_LOG_FLOOR
    half = max(1, cfg.horizon // 2)
    layout = _chunk_layout(cfg.paths, cfg.horizon)

    def chunk(ci):
        rng = chunk_rng(cfg.seed, ci)
        P = layout[ci]
        run = np.full(P, -np.inf)
        at_half = np.zeros(P)
        at_end = np.zeros(P)

        def visit(n_idx, d, ca, cb, cv):
            nonlocal run
            if r == 2.0:
                den_sq = cv * _loglog(cv, floor)
                core = ca / np.sqrt(np.maximum(den_sq, 1e-300))
            else:
                den = (np.maximum(cb, 1.0) * _loglog(cb, floor) ** (r - 1.0)) ** (1.0 / r)
                core = ca / den
            if alpha is not None:
                val = np.exp(np.minimum(alpha * core * core, 709.0))
            else:
                val = np.maximum(core, 0.0)
            crm = np.maximum.accumulate(np.column_stack([run, val]), axis=1)[:, 1:]
            if n_idx[0] <= half <= n_idx[-1]:
                at_half[:] = crm[:, half - n_idx[0]]
            run = crm[:, -1]
            if n_idx[-1] == cfg.horizon:
                at_end[:] = run

        if r != 2.0:
            _scan_r(cfg.spec, rng, P, cfg.horizon, visit)
        else:
            _scan(cfg.spec, rng, P, cfg.horizon, visit)
        return at_half, at_end

    parts = _map_chunks(chunk, len(layout), workers)
    at_half = np.concatenate([p_[0] for p_ in parts])
    at_end = np.concatenate([p_[1] for p_ in parts])
    q = 1.0 if alpha is not None else p
    w_end = at_end ** q if alpha is None else at_end
    w_half = at_half ** q if alpha is None else at_half
    mean, se = _mean_se(float(np.sum(w_end)), float(np.sum(w_end * w_end)), cfg.paths)
    mean_half = float(np.sum(w_half)) / cfg.paths
    rel = abs(mean - mean_half) / max(mean, 1e-300)
    label = (f"sup_moment p={p:g}" if alpha is None else f"sup_exp alpha={alpha:g}")
    return BoundReport(label=label, analytic_bound=math.inf, estimate=mean,
                       std_error=se, paths=cfg.paths, passed=bool(rel < 0.10),
                       extra={"half_horizon_estimate": mean_half,
                              "relative_change": rel})


def _scan_r(spec, rng, n_paths, horizon, visit):
    """Like _scan but cb carries the plain sum of |d|^r (no variant constant),
    for the order-r sup-moment statistic."""
    a = np.zeros(n_paths)
    b = np.zeros(n_paths)
    v = np.zeros(n_paths)
    for lo in range(0, horizon, _BLOCK):
        hi = min(lo + _BLOCK, horizon)
        d = spec.draw(rng, lo, hi, n_paths)
        n_idx = np.arange(lo + 1, hi + 1)
        ca = a[:, None] + np.cumsum(d, axis=1)
        cb = b[:, None] + np.cumsum(np.abs(d) ** spec.r, axis=1)
        cv = v[:, None] + np.cumsum(d * d, axis=1)
        visit(n_idx, d, ca, cb, cv)
        a, b, v = ca[:, -1].copy(), cb[:, -1].copy(), cv[:, -1].copy()


def growth_rate_diagnostic(cfg: ExperimentConfig,
                           workers: int | None = None) -> dict:
    """For the heavy-downside counterexample: medians of the statistic
    normalized by V_n (which grows without bound) and by the deterministic
    conditional-variance root s_n (which vanishes), per checkpoint."""
    if not isinstance(cfg.spec, Counterexample65):
        raise DomainError("growth_rate_diagnostic requires a Counterexample65 spec")
    workers = resolve_workers(workers)
    cks = cfg.checkpoints or (cfg.horizon,)
    floor = DEFAULT_LOG_FLOOR
    s_det = np.sqrt(np.maximum(cfg.spec.s_n_sq(cfg.horizon), 0.0))
    layout = _chunk_layout(cfg.paths, cfg.horizon)

    def chunk(ci):
        rng = chunk_rng(cfg.seed, ci)
        P = layout[ci]
        stat_v = np.zeros((P, len(cks)))
        stat_s = np.zeros((P, len(cks)))

        def visit(n_idx, d, ca, cb, cv):
            for k, n in enumerate(cks):
                if not n_idx[0] <= n <= n_idx[-1]:
                    continue
                col = n - n_idx[0]
                vn = np.sqrt(cv[:, col])
                stat_v[:, k] = ca[:, col] / (np.maximum(vn, floor)
                                             * np.sqrt(_loglog(vn, floor)))
                s = s_det[n - 1]
                stat_s[:, k] = ca[:, col] / (max(s, floor)
                                             * math.sqrt(math.log(math.log(max(s, floor)))))

        _scan(cfg.spec, rng, P, cfg.horizon, visit)
        return stat_v, stat_s

    parts = _map_chunks(chunk, len(layout), workers)
    sv = np.concatenate([p[0] for p in parts])
    ss = np.concatenate([p[1] for p in parts])
    med_v = np.median(sv, axis=0)
    med_s = np.median(ss, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(med_s != 0.0, med_v / med_s, np.inf)
    return {
        "checkpoints": list(cks),
        "median_v_normalized": med_v.tolist(),
        "median_s_normalized": med_s.tolist(),
        "median_ratio": ratio.tolist(),
    }


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

REPORT_COLUMNS = ("label", "analytic_bound", "estimate", "std_error",
                  "paths", "pass")


def report_rows(reports: list[BoundReport]) -> list[dict]:
    return [r.to_dict() for r in reports]


def config_echo(cfg: ExperimentConfig) -> dict:
    d = {
        "spec": spec_to_json(cfg.spec),
        "seed": cfg.seed,
        "paths": cfg.paths,
        "horizon": cfg.horizon,
        "checkpoints": list(cfg.checkpoints),
        "lambda_grid": list(cfg.lambda_grid),
        "x_grid": list(cfg.x_grid),
        "p_list": list(cfg.p_list),
        "statistic": cfg.statistic,
        "se_slack": cfg.se_slack,
    }
    return d

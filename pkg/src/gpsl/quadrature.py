"""Adaptive 1D Gauss-Kronrod quadrature and seeded stratified Monte Carlo.

The Monte Carlo driver works on the unit hypercube. A *proposal* maps
uniform points to samples x with known density q(x); the estimator is the
mean of f(x)/q(x). Strata are cells of a regular grid in u-space with two
samples per cell, so the reported error is the standard error of the
stratified mean.

Random numbers come from counter-based Philox substreams keyed by
(seed, block index). Blocks are fixed by the sample layout, never by the
number of workers, so results are bit-identical for any worker count.
"""

import heapq
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = [
    "QuadratureConfig", "IntegralResult", "IntegrationError",
    "integrate_1d", "integrate_nd_mc", "substream",
    "BoxProposal", "GaussianProposal", "CoulombProposal", "MixtureProposal",
]

STRATEGIES = ("adaptive_1d", "plain_mc", "stratified_mc")

# QUADPACK qk15 abscissae and weights
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

# full 15-point layout: -x0..-x6, 0, x6..x0
_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_WK15 = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
_WG7 = np.zeros(15)
# Gauss nodes are xgk[1], xgk[3], xgk[5] and the centre
_WG7[[1, 3, 5]] = _WG[:3]
_WG7[7] = _WG[3]
_WG7[[13, 11, 9]] = _WG[:3]

_EPS = np.finfo(float).eps


class IntegrationError(RuntimeError):
    """Raised when an integrand produces non-finite values."""

    def __init__(self, msg, n_bad=0):
        super().__init__(msg)
        self.n_bad = n_bad


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_evals: int = 200_000
    seed: int = 0
    strategy: str = "adaptive_1d"
    workers: int = 1

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be > 0")
        if not self.max_evals > 0:
            raise ValueError("max_evals must be > 0")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def replace(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return QuadratureConfig(**d)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    n_evals: int
    converged: bool

    def target(self, cfg):
        return max(cfg.abs_tol, cfg.rel_tol * abs(self.value))


def _finish(value, err, n, cfg):
    ok = err <= max(cfg.abs_tol, cfg.rel_tol * abs(value))
    return IntegralResult(float(value), float(err), int(n), bool(ok))


def _call(f, x):
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape[:1] and y.shape != x.shape:
        # scalar-only integrand
        y = np.array([float(f(xi)) for xi in x])
    bad = ~np.isfinite(y)
    if np.any(bad):
        raise IntegrationError(
            f"integrand returned {int(bad.sum())} non-finite values out of {y.size}",
            n_bad=int(bad.sum()))
    return y


# --------------------------------------------------------------------- 1D

def _qk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    y = _call(f, c + h * _NODES)
    rk = h * np.dot(_WK15, y)
    rg = h * np.dot(_WG7, y)
    mean = 0.5 * rk / h if h else 0.0
    resasc = abs(h) * np.dot(_WK15, np.abs(y - mean))
    resabs = abs(h) * np.dot(_WK15, np.abs(y))
    err = abs(rk - rg)
    # QUADPACK error scaling
    if resasc != 0 and err != 0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50 * _EPS):
        err = max(50 * _EPS * resabs, err)
    return rk, err


def integrate_1d(f, a, b, cfg=None, truncate_at=None):
    """Globally adaptive G7-K15 quadrature of a vectorised f over [a, b].

    For b = +inf the integrand must decay. Either pass `truncate_at`, the
    point beyond which the declared envelope makes the tail negligible, or
    leave it None to use the map x = a + t/(1-t) onto [0, 1).
    """
    cfg = cfg or QuadratureConfig()
    a = float(a)
    b = float(b)
    if not math.isfinite(a) or math.isnan(b) or not a < b:
        raise ValueError("integrate_1d needs finite a < b (b may be +inf)")
    if math.isinf(b):
        if truncate_at is not None:
            return integrate_1d(f, a, float(truncate_at), cfg)

        def g(t):
            t = np.asarray(t, dtype=float)
            s = 1.0 - t
            return f(a + t / s) / (s * s)
        return integrate_1d(g, 0.0, 1.0, cfg)

    val, err = _qk15(f, a, b)
    n = 15
    heap = [(-err, a, b, val)]
    total_v, total_e = val, err
    while total_e > max(cfg.abs_tol, cfg.rel_tol * abs(total_v)) and n + 30 <= cfg.max_evals:
        e, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or (hi - lo) < 1e3 * _EPS * max(abs(lo), abs(hi), 1.0):
            # interval cannot be split further; keep it and stop
            heapq.heappush(heap, (e, lo, hi, v))
            break
        v1, e1 = _qk15(f, lo, mid)
        v2, e2 = _qk15(f, mid, hi)
        n += 30
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        # resum from scratch to avoid drift from incremental updates
        total_v = math.fsum(item[3] for item in heap)
        total_e = math.fsum(-item[0] for item in heap)
    return _finish(total_v, total_e, n, cfg)


# ---------------------------------------------------------------- proposals

class BoxProposal:
    """Uniform density on an axis-aligned box."""

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError("box needs lo < hi componentwise")
        self.dim = self.lo.size
        self.u_dim = self.dim
        self.volume = float(np.prod(self.hi - self.lo))

    def map(self, u):
        return self.lo + u * (self.hi - self.lo)

    def pdf(self, x):
        inside = np.all((x >= self.lo) & (x <= self.hi), axis=1)
        return inside / self.volume


class GaussianProposal:
    """Isotropic normal N(center, sigma^2 I)."""

    def __init__(self, dim, sigma=1.0, center=None):
        self.dim = int(dim)
        self.u_dim = self.dim
        self.sigma = float(sigma)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, float)

    def map(self, u):
        return self.center + self.sigma * ndtri(u)

    def pdf(self, x):
        r2 = np.sum((x - self.center) ** 2, axis=1) / self.sigma ** 2
        return np.exp(-0.5 * r2) / (2 * math.pi * self.sigma ** 2) ** (self.dim / 2)


class CoulombProposal:
    """3D density proportional to 1/r^2 near the centre and 1/r^4 far away.

    q(x) = 2/(pi s) / (1 + (r/s)^2) / (4 pi r^2), the radial part being a
    half-Cauchy of scale s. Dividing a 1/|x-c| or 1/|x-c|^2 singular integrand
    by q leaves a bounded ratio near the centre.
    """

    dim = 3
    u_dim = 3

    def __init__(self, center=(0.0, 0.0, 0.0), scale=1.0):
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)

    def map(self, u):
        r = self.scale * np.tan(0.5 * math.pi * u[:, 0])
        ct = 2.0 * u[:, 1] - 1.0
        st = np.sqrt(np.maximum(0.0, 1.0 - ct * ct))
        ph = 2.0 * math.pi * u[:, 2]
        return self.center + r[:, None] * np.stack(
            [st * np.cos(ph), st * np.sin(ph), ct], axis=1)

    def pdf(self, x):
        r2 = np.sum((x - self.center) ** 2, axis=1)
        s = self.scale
        with np.errstate(divide="ignore"):
            return (2.0 / (math.pi * s)) / (1.0 + r2 / (s * s)) / (4.0 * math.pi * r2)


class MixtureProposal:
    """Finite mixture; the first u coordinate selects the component."""

    def __init__(self, components, weights=None):
        self.components = list(components)
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise ValueError("mixture components must share a dimension")
        self.dim = dims.pop()
        k = len(self.components)
        w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, float)
        if np.any(w <= 0):
            raise ValueError("mixture weights must be positive")
        self.weights = w / w.sum()
        self.edges = np.concatenate([[0.0], np.cumsum(self.weights)])
        self.edges[-1] = 1.0
        self.u_dim = 1 + max(c.u_dim for c in self.components)

    def map(self, u):
        sel = np.searchsorted(self.edges, u[:, 0], side="right") - 1
        sel = np.clip(sel, 0, len(self.components) - 1)
        x = np.empty((u.shape[0], self.dim))
        for i, c in enumerate(self.components):
            m = sel == i
            if np.any(m):
                x[m] = c.map(u[m, 1:1 + c.u_dim])
        return x

    def pdf(self, x):
        return sum(w * c.pdf(x) for w, c in zip(self.weights, self.components))


# ---------------------------------------------------------------- MC driver

_BLOCK = 1 << 15      # samples (or cells) per substream block
_U_MIN = 1e-15


def substream(seed, key):
    """Independent generator for (seed, key); key is an int or tuple of ints."""
    if isinstance(key, int):
        key = (key,)
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _weighted(f, proposal, u):
    np.clip(u, _U_MIN, 1.0 - _U_MIN, out=u)
    x = proposal.map(u)
    q = proposal.pdf(x)
    y = _call(f, x)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(q > 0, y / q, 0.0)
    # f = 0 where q = inf (proposal singular) contributes nothing
    w[~np.isfinite(q)] = 0.0
    bad = ~np.isfinite(w)
    if np.any(bad):
        raise IntegrationError(f"{int(bad.sum())} non-finite weighted samples", int(bad.sum()))
    return w


def _plain_block(f, proposal, seed, b, n):
    rng = substream(seed, (0, b))
    w = _weighted(f, proposal, rng.random((n, proposal.u_dim)))
    return math.fsum(w), math.fsum(w * w)


def _strat_block(f, proposal, seed, b, c0, c1, m):
    rng = substream(seed, (1, b))
    d = proposal.u_dim
    cells = np.arange(c0, c1)
    coords = np.stack(np.unravel_index(cells, (m,) * d), axis=1).astype(float)
    u1 = (coords + rng.random(coords.shape)) / m
    u2 = (coords + rng.random(coords.shape)) / m
    w1 = _weighted(f, proposal, u1)
    w2 = _weighted(f, proposal, u2)
    return math.fsum(w1 + w2), math.fsum((w1 - w2) ** 2)


def _run_blocks(jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda j: j(), jobs))


def integrate_nd_mc(f, domain, cfg=None):
    """Monte Carlo integral of f over R^n (or a box) using a proposal density.

    `f` takes an (N, n) array and returns N values. `domain` is one of the
    proposal classes above (a box gives plain volume integration). With
    strategy 'stratified_mc' (the default for non-1D configs) the u-cube is
    cut into m^d cells, m = floor((max_evals/2)^(1/d)), two samples each.
    """
    cfg = cfg or QuadratureConfig(strategy="stratified_mc")
    if not 2 <= domain.dim <= 6:
        raise ValueError("integrate_nd_mc supports 2 to 6 dimensions")
    strategy = cfg.strategy if cfg.strategy != "adaptive_1d" else "stratified_mc"
    seed = int(cfg.seed)

    if strategy == "plain_mc":
        n = int(cfg.max_evals)
        nb = -(-n // _BLOCK)
        jobs = [(lambda b=b: _plain_block(f, domain, seed, b, min(_BLOCK, n - b * _BLOCK)))
                for b in range(nb)]
        parts = _run_blocks(jobs, cfg.workers)
        s1 = math.fsum(p[0] for p in parts)
        s2 = math.fsum(p[1] for p in parts)
        mean = s1 / n
        var = max(s2 / n - mean * mean, 0.0)
        err = math.sqrt(var / max(n - 1, 1))
        return _finish(mean, err, n, cfg)

    d = domain.u_dim
    m = max(1, int(math.floor((cfg.max_evals / 2.0) ** (1.0 / d) + 1e-9)))
    n_cells = m ** d
    nb = -(-n_cells // _BLOCK)
    jobs = [(lambda b=b: _strat_block(f, domain, seed, b, b * _BLOCK,
                                      min((b + 1) * _BLOCK, n_cells), m))
            for b in range(nb)]
    parts = _run_blocks(jobs, cfg.workers)
    s = math.fsum(p[0] for p in parts)
    sq = math.fsum(p[1] for p in parts)
    mean = s / (2 * n_cells)
    # per-cell variance estimate (w1-w2)^2/2 of single draws, mean of 2 draws
    err = math.sqrt(sq / 4.0) / n_cells
    return _finish(mean, err, 2 * n_cells, cfg)

"""Average impulse and force between two particles, and the recovered pair potential.

A collapse at x_c kicks particle k by

    J_k = (G m_k m0 / gamma) K(x_c - q_k),
    K(y) = (y/|y|^2) [f(|y|) - 4 pi r_C^2 g(y)] = -grad f(|y|),

and collapses happen at rate gamma M/m0 with location density <mu>(x)/M.
Averaging gives the pairwise force G m_j m_k F~_G(d_r) / r_C^2 directed from
k toward j, d_r = |z_j - z_k| / (r_C sqrt 2).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernels import SQRT_2_OVER_PI
from .quadrature import (GaussianProposal, IntegralResult, QuadratureConfig, integrate_1d,
                         integrate_nd_mc, substream)
from .special import erf

SQRT_PI = math.sqrt(math.pi)
# below these the removable singularities switch to their series
_KERNEL_SERIES_CUT = 0.1
_BRACKET_SERIES_CUT = 0.1
_H_SERIES_CUT = 0.5
_DR_LINEAR_CUT = 1e-6
# e^{-(r - d)^2} < e^{-144} beyond r = d + 12
_TAIL = 12.0
_BLOCK = 1 << 15

# exact small-d_r slope: (4/(3 pi)) Int r^2 e^{-r^2} [sqrt(pi) erf(r)/r - 2 e^{-r^2}] dr
SMALL_DR_SLOPE = 1.0 / (3.0 * math.sqrt(2.0 * math.pi))
# the commonly quoted rounder value, about 1.6% higher
SMALL_DR_SLOPE_QUOTED = 4.0 / (3.0 * math.pi ** 2)


@dataclass(frozen=True)
class PairConfiguration:
    """Two point masses; optional isotropic Gaussian position spreads."""
    m_j: float
    m_k: float
    z_j: tuple
    z_k: tuple
    s_j: float = 0.0
    s_k: float = 0.0

    def __post_init__(self):
        if not (self.m_j > 0 and self.m_k > 0):
            raise ValueError("masses must be positive")
        if self.s_j < 0 or self.s_k < 0:
            raise ValueError("position spreads must be >= 0")
        for z in (self.z_j, self.z_k):
            if len(z) != 3 or not all(math.isfinite(c) for c in z):
                raise ValueError("positions must be finite 3-vectors")

    def swapped(self):
        return PairConfiguration(self.m_k, self.m_j, self.z_k, self.z_j, self.s_k, self.s_j)

    @property
    def separation(self):
        return np.asarray(self.z_j, float) - np.asarray(self.z_k, float)


@dataclass(frozen=True)
class ForceVector:
    components: np.ndarray
    error: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.components))


def _kernel_bracket(s):
    # [f - 4 pi r_C^2 g] * r_C / sqrt(2/pi) as a function of s = |y|/r_C
    s = np.asarray(s, float)
    out = np.empty_like(s)
    small = s < _KERNEL_SERIES_CUT
    if np.any(small):
        x = s[small] ** 2
        # sum_{n>=1} (-1)^{n+1} 2n x^n / (2^n n! (2n+1))
        out[small] = x / 3 - x ** 2 / 10 + x ** 3 / 56 - x ** 4 / 432
    if np.any(~small):
        sl = s[~small]
        out[~small] = erf(sl / math.sqrt(2.0)) / sl / SQRT_2_OVER_PI - np.exp(-0.5 * sl * sl)
    return out


def impulse_kernel(y, r_C):
    """K(y) = (y/|y|^2)[f(|y|) - 4 pi r_C^2 g_rC(y)] for an array of 3-vectors."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y2 = np.atleast_2d(y)
    r = np.sqrt(np.sum(y2 * y2, axis=1))
    br = _kernel_bracket(r / r_C) * SQRT_2_OVER_PI / r_C
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0, br / (r * r), 0.0)
    # small r: br ~ r^2/(3 r_C^3) so scale stays finite
    small = (r > 0) & (r < _KERNEL_SERIES_CUT * r_C)
    if np.any(small):
        x = (r[small] / r_C) ** 2
        scale[small] = SQRT_2_OVER_PI / r_C ** 3 * (1 / 3 - x / 10 + x ** 2 / 56 - x ** 3 / 432)
    out = y2 * scale[:, None]
    return out[0] if single else out


def _h_scaled(r, d):
    # e^{-d^2 - r^2} h(2 d r), h(a) = 2 (a cosh a - sinh a)
    a = 2.0 * d * r
    out = np.empty_like(r)
    small = a < _H_SERIES_CUT
    if np.any(small):
        aa = a[small]
        # h(a) = 2 sum_{n>=1} 2n a^{2n+1} / (2n+1)!
        term = aa ** 3 / 6.0
        tot = 2.0 * term
        for n in range(2, 12):
            term = term * aa * aa / ((2 * n) * (2 * n + 1))
            tot = tot + 2.0 * n * term
        out[small] = 2.0 * tot * np.exp(-d * d - r[small] ** 2)
    if np.any(~small):
        rl = r[~small]
        al = a[~small]
        out[~small] = np.exp(-(rl + d) ** 2) * (1 + al) - np.exp(-(rl - d) ** 2) * (1 - al)
    return out


def _radial_bracket(r):
    # sqrt(pi) erf(r)/r - 2 e^{-r^2}
    out = np.empty_like(r)
    small = r < _BRACKET_SERIES_CUT
    if np.any(small):
        x = r[small] ** 2
        # 2 sum_{n>=1} (-1)^{n+1} 2n x^n / (n! (2n+1))
        out[small] = 4 * x / 3 - 4 * x ** 2 / 5 + 2 * x ** 3 / 7 - 2 * x ** 4 / 27
    if np.any(~small):
        rl = r[~small]
        out[~small] = SQRT_PI * erf(rl) / rl - 2.0 * np.exp(-rl * rl)
    return out


def f_tilde_g_result(d_r, cfg=None):
    d = abs(float(d_r))
    if not math.isfinite(d):
        raise ValueError("d_r must be finite")
    if d == 0.0:
        return IntegralResult(0.0, 0.0, 0, True)
    if d < _DR_LINEAR_CUT:
        return IntegralResult(SMALL_DR_SLOPE * d, 0.0, 0, True)
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=1e-11, max_evals=20_000)
    pref = 1.0 / (4.0 * math.pi * d * d)

    def integrand(r):
        r = np.asarray(r, float)
        out = np.zeros_like(r)
        pos = r > 0
        rp = r[pos]
        out[pos] = _h_scaled(rp, d) / rp * _radial_bracket(rp)
        return out

    res = integrate_1d(integrand, 0.0, d + _TAIL, cfg)
    return IntegralResult(pref * res.value, pref * res.error_estimate, res.n_evals,
                          res.converged)


def f_tilde_g(d_r, cfg=None):
    """Reduced radial force integral F~_G(d_r); odd in d_r, F~_G(0) = 0."""
    v = f_tilde_g_result(d_r, cfg).value
    return -v if d_r < 0 else v


def f_tilde_g_mc(d_r, cfg=None):
    """Component of Int g(y - d) K(y) d^3y along d, in units r_C = 1, times 1.

    Independent 3D Monte Carlo oracle for F~_G: y ~ N(d, I) so the weight
    is just the kernel projection.
    """
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=1_000_000,
                                  strategy="stratified_mc", seed=5)
    d = np.array([0.0, 0.0, math.sqrt(2.0) * d_r])

    def f(y):
        g = np.exp(-0.5 * np.sum((y - d) ** 2, axis=1)) / (2 * math.pi) ** 1.5
        return g * impulse_kernel(y, 1.0)[:, 2]

    return integrate_nd_mc(f, GaussianProposal(3, 1.0, d), cfg)


def average_force(pair, params, cfg=None):
    """Mean force on particle k due to particle j (points or Gaussian spreads)."""
    c = params.constants
    r_C = params.r_C
    d = pair.separation
    s2 = pair.s_j ** 2 + pair.s_k ** 2
    dist = float(np.linalg.norm(d))
    pref = c.G * pair.m_j * pair.m_k
    if s2 == 0.0:
        if dist == 0.0:
            return ForceVector(np.zeros(3), np.zeros(3))
        res = f_tilde_g_result(dist / (r_C * math.sqrt(2.0)), cfg)
        unit = d / dist
        mag = pref * res.value / r_C ** 2
        return ForceVector(mag * unit, pref * res.error_estimate / r_C ** 2 * np.abs(unit))
    # relative position d' ~ N(d, s2 I): convolving with g_rC widens it
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=400_000,
                                  strategy="stratified_mc")
    sig = math.sqrt(r_C ** 2 + s2)
    comps, errs = [], []
    for axis in range(3):
        res = integrate_nd_mc(
            lambda y, a=axis: impulse_kernel(y, r_C)[:, a]
            * np.exp(-0.5 * np.sum((y - d) ** 2, axis=1) / sig ** 2) / (2 * math.pi * sig ** 2) ** 1.5,
            GaussianProposal(3, sig, d), cfg)
        comps.append(pref * res.value)
        errs.append(pref * res.error_estimate)
    return ForceVector(np.array(comps), np.array(errs))


@dataclass(frozen=True)
class MeanImpulse:
    per_particle: tuple      # (ForceVector on j, ForceVector on k)
    total: ForceVector
    n_samples: int


def _impulse_block(pair, params, seed, b, n):
    rng = substream(seed, (3, b))
    c = params.constants
    masses = np.array([pair.m_j, pair.m_k])
    pos = np.array([pair.z_j, pair.z_k], float)
    spread = np.array([pair.s_j, pair.s_k])
    # positions drawn from the state, then collapse centre from <mu_rC>/M
    zj = pos[0] + spread[0] * rng.standard_normal((n, 3))
    zk = pos[1] + spread[1] * rng.standard_normal((n, 3))
    which = rng.random(n) < masses[1] / masses.sum()
    xc = np.where(which[:, None], zk, zj) + params.r_C * rng.standard_normal((n, 3))
    Jj = c.G * pair.m_j * c.m0 / params.gamma * impulse_kernel(xc - zj, params.r_C)
    Jk = c.G * pair.m_k * c.m0 / params.gamma * impulse_kernel(xc - zk, params.r_C)
    tot = Jj + Jk
    return [(a.sum(axis=0), (a * a).sum(axis=0)) for a in (Jj, Jk, tot)]


def mc_mean_impulse(pair, n_samples, seed, params, workers=1):
    """Monte Carlo mean impulse per collapse on each particle and in total."""
    n = int(n_samples)
    if n < 10_000:
        raise ValueError("mc_mean_impulse needs n_samples >= 1e4")
    nb = -(-n // _BLOCK)
    sizes = [min(_BLOCK, n - b * _BLOCK) for b in range(nb)]
    jobs = [(b, sizes[b]) for b in range(nb)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda j: _impulse_block(pair, params, seed, *j), jobs))
    else:
        parts = [_impulse_block(pair, params, seed, *j) for j in jobs]
    out = []
    for idx in range(3):
        s1 = np.array([math.fsum(p[idx][0][a] for p in parts) for a in range(3)])
        s2 = np.array([math.fsum(p[idx][1][a] for p in parts) for a in range(3)])
        mean = s1 / n
        var = np.maximum(s2 / n - mean ** 2, 0.0)
        out.append(ForceVector(mean, np.sqrt(var / (n - 1))))
    return MeanImpulse((out[0], out[1]), out[2], n)


def effective_pair_potential(d, m_p, M_source, params, cfg=None):
    """-G m_p M Int f(|x|) g_rC(x - X) d^3x with |X| = d, by 1D quadrature.

    The angular integral is done in closed form, leaving (r_C = 1 units)
    1/(d sqrt(2 pi)) Int_0^inf erf(s/sqrt2) [e^{-(s-d)^2/2} - e^{-(s+d)^2/2}] ds.
    Exact value: -G m_p M erf(d / (2 r_C)) / d.
    """
    d = float(d)
    if not d >= 0:
        raise ValueError("d must be >= 0")
    c = params.constants
    r_C = params.r_C
    x = d / r_C
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=1e-12, max_evals=20_000)

    if x < 1e-6:
        # d -> 0 limit of the bracket / d is 2 s e^{-s^2/2}
        def integrand(s):
            return erf(s / math.sqrt(2.0)) * 2 * s * np.exp(-0.5 * s * s) / math.sqrt(2 * math.pi)
    else:
        def integrand(s):
            return erf(s / math.sqrt(2.0)) * (np.exp(-0.5 * (s - x) ** 2)
                                              - np.exp(-0.5 * (s + x) ** 2)) / (x * math.sqrt(2 * math.pi))

    res = integrate_1d(integrand, 0.0, x + 40.0, cfg)
    return -c.G * m_p * M_source * res.value / r_C


def effective_pair_potential_exact(d, m_p, M_source, params):
    c = params.constants
    x = d / (2 * params.r_C)
    if x < 1e-8:
        return -c.G * m_p * M_source / (SQRT_PI * params.r_C)
    return -c.G * m_p * M_source * erf(x) / d

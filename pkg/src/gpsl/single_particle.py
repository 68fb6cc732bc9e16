"""Single-particle decoherence rates Gamma(d~) for GPSL and the TD comparators.

All separations are d~ = |x - y| / (2 r_C). Rates are in 1/s (or in the
unit-free system when ModelParams.unit_free() is used).
"""

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .kernels import ModelParams, erf, erf_kernel_f
from .quadrature import (BoxProposal, CoulombProposal, GaussianProposal, IntegralResult,
                         MixtureProposal, QuadratureConfig, integrate_nd_mc)
from .special import bessel_i0e

SQRT_PI = math.sqrt(math.pi)
PI4 = math.pi ** 4
# perturbative expansion needs r_p / r_C below this
RP_VALIDITY = 0.1
# below this d~ the removable 1/d~ singularities use their power series
SERIES_CUT = 0.5

F_TILDE_GRID_MAX = 6.0
F_TILDE_GRID_STEP = 0.05
F_TILDE_TABLE_CFG = QuadratureConfig(abs_tol=1e-12, rel_tol=1e-12, max_evals=2 * 40 ** 4,
                                     seed=20240601, strategy="stratified_mc")


class ValidityError(ValueError):
    """A model is used outside the regime where its formula holds."""


class Model(str, enum.Enum):
    GPSL_exact = "GPSL_exact"
    GPSL_perturbative = "GPSL_perturbative"
    TD_CSL = "TD_CSL"
    TD_DP = "TD_DP"


@dataclass(frozen=True)
class DecoherencePoint:
    d_tilde: float
    rate: float
    error: float
    model: Model
    collapse_part: float = float("nan")
    gravity_part: float = float("nan")
    converged: bool = True
    flags: tuple = ()


@dataclass
class DecoherenceCurve:
    model: Model
    points: list
    params: ModelParams
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = [p.d_tilde for p in self.points]
        if any(b <= a for a, b in zip(d, d[1:])):
            raise ValueError("d_tilde must be strictly increasing")

    @property
    def d_tilde(self):
        return np.array([p.d_tilde for p in self.points])

    @property
    def rates(self):
        return np.array([p.rate for p in self.points])

    @property
    def errors(self):
        return np.array([p.error for p in self.points])


def _check_d(d_tilde):
    d = float(d_tilde)
    if math.isnan(d) or d < 0:
        raise ValueError(f"d_tilde must be >= 0, got {d_tilde}")
    return d


# ----------------------------------------------------------------- GPSL

def gamma_gpsl_exact(d_tilde, particle, params, cfg=None):
    """Exact GPSL rate, no expansion in r_p.

    Using sqrt(g(x-z) g(y-z)) = exp(-d~^2/2) g(z - midpoint) the overlap
    integral becomes a Gaussian average over u ~ N(0, r_C^2):

        Gamma = lam [1 - e^{-d~^2/2} + e^{-d~^2/2} E_u 2 sin^2(r_p Delta/2)],
        Delta = f(|u + a|) - f(|u - a|),  |a| = d~ r_C.
    """
    d = _check_d(d_tilde)
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=200_000,
                                  strategy="stratified_mc")
    lam = params.collapse_rate(particle.mass)
    r_C = params.r_C
    r_p = particle.r_p(params)
    flags = ()
    if r_p > RP_VALIDITY * r_C:
        flags = ("r_p_above_perturbative_bound",)
    overlap = math.exp(-0.5 * d * d)
    collapse = lam * -math.expm1(-0.5 * d * d)
    if d == 0.0 or r_p == 0.0:
        return DecoherencePoint(d, collapse, 0.0, Model.GPSL_exact, collapse, 0.0, True, flags)
    if overlap < 1e-300:
        # gravity term is bounded by 2 lam e^{-d~^2/2}; nothing left to integrate
        return DecoherencePoint(d, lam, lam * 2.0 * overlap, Model.GPSL_exact,
                                collapse, 0.0, True, flags)
    a = np.array([0.0, 0.0, d * r_C])

    def integrand(u):
        fp = erf_kernel_f(np.linalg.norm(u + a, axis=1), r_C)
        fm = erf_kernel_f(np.linalg.norm(u - a, axis=1), r_C)
        # times the Gaussian density so the proposal weight cancels it
        g = np.exp(-0.5 * np.sum(u * u, axis=1) / r_C ** 2) / (2 * math.pi * r_C ** 2) ** 1.5
        return g * 2.0 * np.sin(0.5 * r_p * (fp - fm)) ** 2

    res = integrate_nd_mc(integrand, GaussianProposal(3, r_C), cfg)
    grav = lam * overlap * res.value
    err = lam * overlap * res.error_estimate
    return DecoherencePoint(d, collapse + grav, err, Model.GPSL_exact, collapse, grav,
                            res.converged, flags)


def _ftilde_integrand(d):
    # u in [0,1)^4 -> theta = pi u, k = Rayleigh quantile; the Rayleigh
    # Jacobian cancels the Gaussian so the integrand stays bounded
    def f(u):
        tk = math.pi * u[:, 0]
        tv = math.pi * u[:, 1]
        k = np.sqrt(-2.0 * np.log1p(-u[:, 2]))
        v = np.sqrt(-2.0 * np.log1p(-u[:, 3]))
        ck, sk, cv, sv = np.cos(tk), np.sin(tk), np.cos(tv), np.sin(tv)
        kv = k * v
        b = kv * sk * sv
        # e^{-A} I0(B) evaluated as e^{B - A} i0e(B)
        expo = -0.5 * (k * k + v * v) + kv * ck * cv + b
        return (4.0 * PI4 * np.exp(expo) * bessel_i0e(b) * sk * sv
                * (np.sin(d * k * ck) / k) * (np.sin(d * v * cv) / v))
    return f


def f_tilde(d_tilde, cfg=None):
    """The dimensionless integral F~(d~) by 4D stratified Monte Carlo.

    F~ = 4 pi^2 Int dtk dtv dk dv exp(-(k^2 + v^2 - kv cos tk cos tv))
         I0(kv sin tk sin tv) sin tk sin tv sin(d~ k cos tk) sin(d~ v cos tv)
    over [0, pi]^2 x [0, inf)^2.
    """
    d = _check_d(d_tilde)
    cfg = cfg or F_TILDE_TABLE_CFG
    if d == 0.0:
        return IntegralResult(0.0, 0.0, 0, True)
    return integrate_nd_mc(_ftilde_integrand(d), BoxProposal([0.0] * 4, [1.0] * 4), cfg)


def f_tilde_realspace(d_tilde, cfg=None):
    """Independent real-space form of F~ (units r_C = 1).

    F~ = pi^4 E_{u ~ N(0, I)} [(f(|u + a|) - f(|u - a|))^2], |a| = d~.
    Used as an oracle for the 4D Fourier-side integral.
    """
    d = _check_d(d_tilde)
    cfg = cfg or QuadratureConfig(abs_tol=1e-12, rel_tol=1e-4, max_evals=400_000,
                                  strategy="stratified_mc")
    if d == 0.0:
        return IntegralResult(0.0, 0.0, 0, True)
    a = np.array([0.0, 0.0, d])

    def integrand(u):
        diff = erf_kernel_f(np.linalg.norm(u + a, axis=1), 1.0) - \
            erf_kernel_f(np.linalg.norm(u - a, axis=1), 1.0)
        return PI4 * diff ** 2 * np.exp(-0.5 * np.sum(u * u, axis=1)) / (2 * math.pi) ** 1.5

    return integrate_nd_mc(integrand, GaussianProposal(3, 1.0), cfg)


def f_tilde_grid():
    n = int(round(F_TILDE_GRID_MAX / F_TILDE_GRID_STEP))
    return np.round(np.arange(n + 1) * F_TILDE_GRID_STEP, 10)


def compute_f_tilde_table(cfg=None, workers=1):
    """(d, F~, stderr) on the shipped grid; each point has its own seed."""
    cfg = cfg or F_TILDE_TABLE_CFG
    rows = []
    for i, d in enumerate(f_tilde_grid()):
        r = f_tilde(d, cfg.replace(seed=cfg.seed + i, workers=workers))
        rows.append((float(d), r.value, r.error_estimate))
    return rows


@lru_cache(maxsize=1)
def _table():
    from scipy.interpolate import CubicSpline
    text = resources.files("gpsl").joinpath("data/ftilde_table.csv").read_text()
    rows = [r for r in csv.reader(line for line in text.splitlines()
                                  if line and not line.startswith("#"))]
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    d, F, e = data[:, 0], data[:, 1], data[:, 2]
    # F~ is even in d~; mirroring pins the zero slope at the origin
    dd = np.concatenate([-d[:0:-1], d])
    FF = np.concatenate([F[:0:-1], F])
    return CubicSpline(dd, FF), CubicSpline(d, e), float(F[-1])


def f_tilde_interp(d_tilde):
    """F~ from the shipped table (cubic spline) with a d~^-4 tail beyond it.

    Far out F~ -> 4 pi^4 / d~^4; the tail is 4 pi^4/d~^4 (1 + c/d~^2) with c
    matched to the last table value. Returns (value, stderr).
    """
    d = _check_d(d_tilde)
    spl, espl, f_end = _table()
    if d <= F_TILDE_GRID_MAX:
        return float(spl(d)), float(max(espl(d), 0.0))
    x = F_TILDE_GRID_MAX
    c = (f_end * x ** 4 / (4 * PI4) - 1.0) * x * x
    return 4 * PI4 / d ** 4 * (1.0 + c / (d * d)), 0.0


def gamma_gpsl_perturbative(d_tilde, particle, params, direct=False, cfg=None):
    """Second-order GPSL rate

    Gamma = lam [1 - e^{-d~^2/2} + (r_p/r_C)^2 e^{-d~^2/2} F~(d~) / (2 pi^4)].

    F~ comes from the shipped table unless `direct` is set.
    """
    d = _check_d(d_tilde)
    r_p = particle.r_p(params)
    ratio = r_p / params.r_C
    if ratio > RP_VALIDITY:
        raise ValidityError(
            f"perturbative GPSL rate needs r_p/r_C <= {RP_VALIDITY}, got {ratio:.3g}")
    lam = params.collapse_rate(particle.mass)
    overlap = math.exp(-0.5 * d * d)
    collapse = lam * -math.expm1(-0.5 * d * d)
    if direct:
        r = f_tilde(d, cfg)
        F, Ferr, ok = r.value, r.error_estimate, r.converged
    else:
        (F, Ferr), ok = f_tilde_interp(d), True
    pref = lam * ratio ** 2 * overlap / (2 * PI4)
    grav = pref * F
    return DecoherencePoint(d, collapse + grav, pref * Ferr, Model.GPSL_perturbative,
                            collapse, grav, ok)


# ------------------------------------------------------------------ TD

def _dp_bracket(d):
    # 1 - sqrt(pi)/(2d) erf(d) = sum_{n>=1} (-1)^{n+1} d^{2n} / (n! (2n+1))
    if d < SERIES_CUT:
        x = d * d
        term, total, n = 1.0, 0.0, 1
        while True:
            term *= x / n
            t = term / (2 * n + 1)
            total += t if n % 2 else -t
            if t <= 1e-18 * abs(total):
                return total
            n += 1
    if math.isinf(d):
        return 1.0
    return 1.0 - SQRT_PI / (2.0 * d) * erf(d)


def dp_prefactor(particle, params):
    c = params.constants
    return 2.0 * math.sqrt(2.0) * math.pi * c.G * particle.mass ** 2 / (c.hbar * params.r_C)


def gamma_td_dp(d_tilde, particle, params):
    """TD-DP rate, pref * [1 - sqrt(pi)/(2 d~) erf(d~)]; d~ may be inf."""
    d = _check_d(d_tilde)
    rate = dp_prefactor(particle, params) * _dp_bracket(d)
    return DecoherencePoint(d, rate, 0.0, Model.TD_DP, 0.0, rate)


def _csl_bracket(d):
    # (d + 1/(2d)) erf(d) - (2 - e^{-d^2})/sqrt(pi)
    #   = 2/sqrt(pi) sum_m c_m d^{2m}, c_1 = 1/3, c_2 = -1/30, ...
    if d < SERIES_CUT:
        x = d * d
        total = 0.0
        fact_m1 = 1.0   # (m-1)!
        pw = 1.0
        for m in range(1, 60):
            pw *= x
            fact_m = fact_m1 * m
            sgn = -1.0 if m % 2 else 1.0
            c = (-sgn) / (fact_m1 * (2 * m - 1)) + sgn / (2 * fact_m * (2 * m + 1)) \
                + sgn / (2 * fact_m)
            t = c * pw
            total += t
            if abs(t) <= 1e-18 * abs(total):
                break
            fact_m1 = fact_m
        return 2.0 / SQRT_PI * total
    return (d + 0.5 / d) * erf(d) - (2.0 - math.exp(-d * d)) / SQRT_PI


def csl_gravity_prefactor(particle, params, td):
    c = params.constants
    return (math.pi * params.r_C / td.gamma_csl) * (c.m0 * particle.mass * c.G / c.hbar) ** 2


def gamma_td_csl(d_tilde, particle, params, td):
    """TD-CSL rate: collapse part plus the linearly growing gravity part."""
    if td is None:
        raise ValueError("TD_CSL needs TDParams (gamma_csl)")
    d = _check_d(d_tilde)
    c = params.constants
    coll = td.gamma_csl * (4 * math.pi * params.r_C ** 2) ** -1.5 \
        * (particle.mass / c.m0) ** 2 * -math.expm1(-d * d)
    grav = csl_gravity_prefactor(particle, params, td) * _csl_bracket(d)
    return DecoherencePoint(d, coll + grav, 0.0, Model.TD_CSL, coll, grav)


def td_csl_gravity_integral_mc(d_tilde, r_C=1.0, cfg=None):
    """Brute-force Int d^3z [f(|z|) - f(|z + D|)]^2 with |D| = 2 d~ r_C.

    Closed form: 8 pi r_C times the CSL bracket. The integrand is bounded
    and falls like 1/|z|^4, so a Gaussian core plus Coulomb-tailed
    components centred on both kernels covers it.
    """
    d = _check_d(d_tilde)
    cfg = cfg or QuadratureConfig(abs_tol=1e-12, rel_tol=1e-3, max_evals=400_000,
                                  strategy="stratified_mc")
    D = np.array([0.0, 0.0, 2.0 * d * r_C])
    s = max(r_C, 2.0 * d * r_C)
    prop = MixtureProposal([GaussianProposal(3, r_C, -0.5 * D),
                            CoulombProposal(np.zeros(3), s), CoulombProposal(-D, s)])

    def integrand(z):
        return (erf_kernel_f(np.linalg.norm(z, axis=1), r_C)
                - erf_kernel_f(np.linalg.norm(z + D, axis=1), r_C)) ** 2

    return integrate_nd_mc(integrand, prop, cfg)


# ---------------------------------------------------------- null check

def self_interaction_null_check(d_tilde, cfg=None):
    """Difference of the two mirrored self-interaction integrals (r_C = 1).

    Int sqrt(g(z) g(z + d)) f(|z|) - Int sqrt(g(z) g(z - d)) f(|z|), |d| = 2 d~.
    Sampled as one integrand on a proposal symmetric under z -> -z, so the
    estimate is a genuine Monte Carlo zero with an honest error bar.
    """
    d = _check_d(d_tilde)
    cfg = cfg or QuadratureConfig(abs_tol=1e-12, rel_tol=1e-3, max_evals=200_000,
                                  strategy="stratified_mc", seed=7)
    if d == 0.0:
        return IntegralResult(0.0, 0.0, 0, True)
    dv = np.array([0.0, 0.0, 2.0 * d])
    prop = MixtureProposal([GaussianProposal(3, 1.0, 0.5 * dv),
                            GaussianProposal(3, 1.0, -0.5 * dv)])

    def g(z):
        return np.exp(-0.5 * np.sum(z * z, axis=1)) / (2 * math.pi) ** 1.5

    def integrand(z):
        f = erf_kernel_f(np.linalg.norm(z, axis=1), 1.0)
        return f * (np.sqrt(g(z) * g(z + dv)) - np.sqrt(g(z) * g(z - dv)))

    return integrate_nd_mc(integrand, prop, cfg)


# ------------------------------------------------------------- helpers

def fit_quadratic_coefficient(d, F):
    """Least-squares constant fitted to F~/d~^2. Returns (coef, stderr)."""
    d = np.asarray(d, float)
    ratio = np.asarray(F, float) / d ** 2
    n = ratio.size
    coef = float(np.mean(ratio))
    se = float(np.std(ratio, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return coef, se


def fit_exponential_tail(d, F, d_ref=3.5):
    """Linear fit of log F~ against d~.

    Returns dict with slope, its stderr, the decay length -1/slope and the
    amplitude at d_ref, i.e. F~ ~ A exp(-(d~ - d_ref)/L).
    """
    d = np.asarray(d, float)
    y = np.log(np.asarray(F, float))
    (slope, icpt), cov = np.polyfit(d, y, 1, cov=True)
    return {
        "slope": float(slope),
        "slope_se": float(math.sqrt(cov[0, 0])),
        "decay_length": float(-1.0 / slope),
        "amplitude": float(math.exp(icpt + slope * d_ref)),
        "d_ref": d_ref,
    }


def plateau_gpsl(particle, params):
    return params.collapse_rate(particle.mass)


def crossover_mass(params):
    """Mass above which the GPSL plateau lies below the TD-DP plateau.

    gamma m/m0 < 2 sqrt(2) pi G m^2 / (hbar r_C)  <=>  m > m*.
    """
    c = params.constants
    return params.gamma * c.hbar * params.r_C / (2 * math.sqrt(2) * math.pi * c.G * c.m0)


def decoherence_curve(model, d_grid, particle, params, td=None, cfg=None, workers=1):
    """Evaluate one model on a grid; MC points get seeds cfg.seed + index."""
    model = Model(model)
    pts = []
    base = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=200_000,
                                   strategy="stratified_mc")
    for i, d in enumerate(d_grid):
        if model is Model.GPSL_exact:
            p = gamma_gpsl_exact(d, particle, params,
                                 base.replace(seed=base.seed + i, workers=workers))
        elif model is Model.GPSL_perturbative:
            p = gamma_gpsl_perturbative(d, particle, params)
        elif model is Model.TD_DP:
            p = gamma_td_dp(d, particle, params)
        else:
            p = gamma_td_csl(d, particle, params, td)
        pts.append(p)
    if not all(p.converged for p in pts):
        warnings.warn(f"{model.value}: some points did not reach tolerance")
    return DecoherenceCurve(model, pts, params)

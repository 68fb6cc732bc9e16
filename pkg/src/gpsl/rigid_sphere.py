"""Decoherence of a homogeneous rigid sphere (sharp-wall density).

Kernels are functions of x = D~ = |D|/(2R). Two conventions are offered:

* ``form="quoted"``: the commonly quoted closed forms (default).
* ``form="integral"``: closed forms re-derived from the defining 3D
  integrals. They differ for K_G^GPSL (different shape) and for K^DP (an
  overall factor (2 pi)^{3/2}/2); see ``k_g_gpsl_integral`` and
  ``k_g_dp_integral``. K_C and K_G^CSL agree in both conventions.

The Monte Carlo oracles at the bottom sample the defining integrals
directly in real space (R = 1) and never touch the closed forms.
"""

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import (BoxProposal, CoulombProposal, GaussianProposal, IntegralResult,
                         MixtureProposal, QuadratureConfig, integrate_nd_mc)
from .single_particle import DecoherencePoint, Model, ValidityError

# R must exceed this many r_C for the sharp-wall kernels
SHARP_WALL_MIN = 20.0
DP_PREF = math.pi ** 1.5 / (2.0 * math.sqrt(2.0))
CHI_SERIES_CUT = 1e-3


@dataclass(frozen=True)
class SphereSpec:
    mass: float
    radius: float

    def __post_init__(self):
        if not (self.mass > 0 and self.radius > 0):
            raise ValueError("sphere mass and radius must be > 0")

    @property
    def mu0(self):
        return 3.0 * self.mass / (4.0 * math.pi * self.radius ** 3)

    @classmethod
    def from_density(cls, mu0, radius):
        return cls(4.0 / 3.0 * math.pi * radius ** 3 * mu0, radius)

    def R_M(self, params):
        return params.feedback_length(self.mass)

    def check(self, params):
        if self.radius < SHARP_WALL_MIN * params.r_C:
            raise ValidityError(
                f"sharp-wall sphere kernels need R >= {SHARP_WALL_MIN:g} r_C "
                f"(R = {self.radius:.3g}, r_C = {params.r_C:.3g})")


def _x(x):
    a = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(a) & ~np.isposinf(a)) or np.any(a < 0):
        raise ValueError("kernel argument must be >= 0")
    return a


def _out(a, v):
    return float(v) if a.ndim == 0 else v


def k_c(x):
    """Overlap-volume fraction of two equal spheres, Theta(1-x)(1 - 3x/2 + x^3/2)."""
    a = _x(x)
    xi = np.minimum(a, 1.0)
    return _out(a, np.where(a < 1.0, 1.0 - 1.5 * xi + 0.5 * xi ** 3, 0.0))


def k_g_gpsl(x, form="quoted"):
    """GPSL gravitational sphere kernel; exactly zero for x >= 1."""
    if form == "integral":
        return k_g_gpsl_integral(x)
    a = _x(x)
    xi = np.minimum(a, 1.0)
    v = 0.5 * xi ** 2 * ((3.0 + 60.0 * xi ** 2) * np.arccos(xi)
                         - xi * np.sqrt(1.0 - xi ** 2) * (13.0 + 50.0 * xi ** 2))
    return _out(a, np.where(a < 1.0, v, 0.0))


def k_g_gpsl_integral(x):
    """K_G^GPSL from its defining lens integral: x^2 (1-x)^4 (4+x) / 10."""
    a = _x(x)
    xi = np.minimum(a, 1.0)
    return _out(a, np.where(a < 1.0, xi ** 2 * (1.0 - xi) ** 4 * (4.0 + xi) / 10.0, 0.0))


def k_g_dp(x, form="quoted"):
    """DP sphere kernel, saturating at DP_PREF * 12/5."""
    a = _x(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = 4.0 * a ** 2 - 3.0 * a ** 3 + 0.4 * a ** 5
        outer = 12.0 / 5.0 - 1.0 / a
    v = DP_PREF * np.where(a <= 1.0, inner, outer)
    if form == "integral":
        v = v / (math.sqrt(2.0) * math.pi ** 1.5)
    return _out(a, v)


def k_g_dp_integral(x):
    return k_g_dp(x, form="integral")


def k_g_csl(x, form="quoted"):
    """TD-CSL sphere kernel; continuous at 1, slope pi at large x."""
    a = _x(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = 56.0 * a ** 2 - 28.0 * a ** 4 + 14.0 * a ** 5 - a ** 7
        outer = 70.0 * a - 36.0 + 7.0 / a
    return _out(a, math.pi / 70.0 * np.where(a <= 1.0, inner, outer))


def f_sp(x):
    """(1/|z|) * sphere indicator convolved, over (2 pi R)^2, as a function of r/R."""
    a = _x(x)
    with np.errstate(divide="ignore"):
        outer = 1.0 / (3.0 * a)
    return _out(a, np.where(a < 1.0, (3.0 - a * a) / 6.0, outer) / math.pi)


def chi_tilde(k, R):
    """Fourier transform of the radius-R ball indicator (unitary convention)."""
    kk = np.asarray(k, dtype=float)
    if np.any(kk < 0) or R <= 0:
        raise ValueError("chi_tilde needs k >= 0 and R > 0")
    t = kk * R
    small = t < CHI_SERIES_CUT
    ts = np.where(small, 1.0, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = math.sqrt(2.0 / math.pi) * (np.sin(ts) - ts * np.cos(ts)) / ts ** 3 * R ** 3
    series = math.sqrt(2.0 / math.pi) * R ** 3 * (1.0 / 3.0 - t ** 2 / 30.0 + t ** 4 / 840.0)
    return _out(kk, np.where(small, series, exact))


def density_profile(r, sphere, params):
    """Gaussian-smeared sharp sphere density at radius r (for plots only).

    mu0/2 [erf((R - r)/(sqrt2 r_C)) + erf((R + r)/(sqrt2 r_C))]
      - mu0 r_C/(r sqrt(2 pi)) [e^{-(R-r)^2/2r_C^2} - e^{-(R+r)^2/2r_C^2}]
    """
    from .special import erf
    r = np.maximum(np.asarray(r, dtype=float), 1e-300)
    R, s = sphere.radius, params.r_C
    s2 = math.sqrt(2.0) * s
    v = 0.5 * (erf((R - r) / s2) + erf((R + r) / s2)) - s / (r * math.sqrt(2 * math.pi)) * (
        np.exp(-((R - r) / s) ** 2 / 2) - np.exp(-((R + r) / s) ** 2 / 2))
    return sphere.mu0 * v


def gamma_sphere(model, D_tilde, sphere, params, td=None, form="quoted"):
    """Full centre-of-mass decoherence rate of the sphere for one model."""
    model = Model(model) if not isinstance(model, Model) else model
    x = float(D_tilde)
    if x < 0 or math.isnan(x):
        raise ValueError("D_tilde must be >= 0")
    sphere.check(params)
    c = params.constants
    M, R = sphere.mass, sphere.radius
    if model in (Model.GPSL_exact, Model.GPSL_perturbative):
        lam = params.collapse_rate(M)
        coll = lam * (1.0 - k_c(x))
        grav = lam * (sphere.R_M(params) / R) ** 2 * k_g_gpsl(x, form)
        return DecoherencePoint(x, coll + grav, 0.0, Model.GPSL_perturbative, coll, grav)
    if model is Model.TD_DP:
        rate = 2.0 * c.G * M ** 2 / (c.hbar * R) * k_g_dp(x, form)
        return DecoherencePoint(x, rate, 0.0, Model.TD_DP, 0.5 * rate, 0.5 * rate)
    if td is None:
        raise ValueError("TD_CSL needs TDParams (gamma_csl)")
    coll = 3.0 * td.gamma_csl / (4.0 * math.pi * R ** 3) * (M / c.m0) ** 2 * (1.0 - k_c(x))
    grav = R / td.gamma_csl * (c.G * M * c.m0 / c.hbar) ** 2 * k_g_csl(x, form)
    return DecoherencePoint(x, coll + grav, 0.0, Model.TD_CSL, coll, grav)


def balance_radius(mu0, params, exact=False):
    """Radius at which R_M = R for a sphere of density mu0.

    The order-of-magnitude version drops the 4 pi/3 of M = (4 pi/3) mu0 R^3:
    R ~ sqrt(gamma hbar / (G m0 mu0)).
    """
    c = params.constants
    r = math.sqrt(params.gamma * c.hbar / (c.G * c.m0 * mu0))
    return r / math.sqrt(4.0 * math.pi / 3.0) if exact else r


# ------------------------------------------------------------- oracles

def _norm(z):
    return np.sqrt(np.sum(z * z, axis=1))


def _default_cfg(seed=11):
    return QuadratureConfig(abs_tol=1e-15, rel_tol=1e-3, max_evals=2_000_000,
                            strategy="stratified_mc", seed=seed)


def overlap_fraction_mc(x, cfg=None):
    """Fraction of a unit ball inside a copy shifted by 2x: K_C oracle."""
    cfg = cfg or _default_cfg()
    D = np.array([0.0, 0.0, 2.0 * x])
    res = integrate_nd_mc(lambda z: ((_norm(z) < 1) & (_norm(z + D) < 1)).astype(float),
                          BoxProposal([-1.0] * 3, [1.0] * 3), cfg)
    v = 4.0 * math.pi / 3.0
    return IntegralResult(res.value / v, res.error_estimate / v, res.n_evals, res.converged)


def k_g_gpsl_mc(x, cfg=None):
    """27 pi/8 Int chi(z) chi(z+D) [F_Sp(|z|) - F_Sp(|z+D|)]^2, D = 2x."""
    cfg = cfg or _default_cfg()
    D = np.array([0.0, 0.0, 2.0 * x])

    def f(z):
        r1, r2 = _norm(z), _norm(z + D)
        return ((r1 < 1) & (r2 < 1)) * (f_sp(r1) - f_sp(r2)) ** 2

    res = integrate_nd_mc(f, BoxProposal([-1.0] * 3, [1.0] * 3), cfg)
    s = 27.0 * math.pi / 8.0
    return IntegralResult(s * res.value, s * res.error_estimate, res.n_evals, res.converged)


def k_g_csl_mc(x, cfg=None):
    """9 pi^2/8 Int over all space [F_Sp(|z|) - F_Sp(|z+D|)]^2, D = 2x."""
    cfg = cfg or _default_cfg()
    D = np.array([0.0, 0.0, 2.0 * x])
    s = max(1.0, 2.0 * x)
    prop = MixtureProposal([GaussianProposal(3, 1.0, -0.5 * D),
                            CoulombProposal(np.zeros(3), s), CoulombProposal(-D, s)])
    res = integrate_nd_mc(lambda z: (f_sp(_norm(z)) - f_sp(_norm(z + D))) ** 2, prop, cfg)
    k = 9.0 * math.pi ** 2 / 8.0
    return IntegralResult(k * res.value, k * res.error_estimate, res.n_evals, res.converged)


def k_g_dp_mc(x, cfg=None):
    """9/8 Int chi(z) [F_Sp(|z|) - F_Sp(|z+D|)], D = 2x.

    This is K^DP as defined by the rate integral; the quoted closed form
    is larger by (2 pi)^{3/2}/2, so compare against k_g_dp(x, 'integral').
    """
    cfg = cfg or _default_cfg()
    D = np.array([0.0, 0.0, 2.0 * x])
    res = integrate_nd_mc(lambda z: (_norm(z) < 1) * (f_sp(_norm(z)) - f_sp(_norm(z + D))),
                          BoxProposal([-1.0] * 3, [1.0] * 3), cfg)
    k = 9.0 / 8.0
    return IntegralResult(k * res.value, k * res.error_estimate, res.n_evals, res.converged)


def unitary_term_sphere_check(D_tilde, cfg=None):
    """Difference of the +D and -D unitary-like integrals for a unit sphere.

    Int dz dz' chi(z')/|z - z'| chi(z) [chi(z + D) - chi(z - D)], sampled
    as one 6D integrand (z, z' uniform in the bounding boxes).
    """
    x = float(D_tilde)
    cfg = cfg or QuadratureConfig(abs_tol=1e-15, rel_tol=1e-3, max_evals=2_000_000,
                                  strategy="stratified_mc", seed=13)
    if x == 0.0:
        return IntegralResult(0.0, 0.0, 0, True)
    D = np.array([0.0, 0.0, 2.0 * x])

    def f(w):
        z, zp = w[:, :3], w[:, 3:]
        inside = (_norm(z) < 1) & (_norm(zp) < 1)
        sign = (_norm(z + D) < 1).astype(float) - (_norm(z - D) < 1)
        dist = _norm(z - zp)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(inside & (sign != 0), sign / dist, 0.0)
        return v

    return integrate_nd_mc(f, BoxProposal([-1.0] * 6, [1.0] * 6), cfg)

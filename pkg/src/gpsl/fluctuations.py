"""Covariance of the classical Newtonian field, GPSL versus the TD models.

Values follow the dt-scaled convention: Cov[Phi(x) dt, Phi(y) dt] / dt.
For GPSL the field is sourced only where collapses can occur, so

    C(x, y) = (m0 G^2 / gamma) Int d^3z <mu_rC>(z) / (|x - z| |y - z|),

finite even at x = y. The TD covariances are density independent and
divergent (DP on the diagonal, CSL everywhere); divergence is reported as
a flag rather than regularised.
"""

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import (CoulombProposal, GaussianProposal, MixtureProposal, QuadratureConfig,
                         integrate_nd_mc)


@dataclass(frozen=True)
class MassDensityField:
    """Expected mass density as a sum of isotropic Gaussian lumps.

    Each component is (mass, centre, sigma); a point mass has sigma = 0 and
    is smeared by r_C like every other component.
    """
    components: tuple = ()

    def __post_init__(self):
        for m, c, s in self.components:
            if m < 0 or s < 0 or len(c) != 3:
                raise ValueError("components need mass >= 0, sigma >= 0 and 3D centres")

    @classmethod
    def point_masses(cls, items):
        return cls(tuple((float(m), tuple(map(float, p)), 0.0) for m, p in items))

    @classmethod
    def gaussian_mixture(cls, items):
        return cls(tuple((float(m), tuple(map(float, p)), float(s)) for m, p, s in items))

    @property
    def total_mass(self):
        return math.fsum(m for m, _, _ in self.components)

    def scaled(self, k):
        return MassDensityField(tuple((k * m, c, s) for m, c, s in self.components))

    def smeared(self, z, r_C):
        """<mu_rC>(z) for an (N, 3) array."""
        out = np.zeros(z.shape[0])
        for m, c, s in self.components:
            if m == 0:
                continue
            w2 = r_C ** 2 + s ** 2
            r2 = np.sum((z - np.asarray(c)) ** 2, axis=1)
            out += m * np.exp(-0.5 * r2 / w2) / (2 * math.pi * w2) ** 1.5
        return out


@dataclass(frozen=True)
class CovarianceResult:
    value: float
    error: float = 0.0
    divergent: bool = False
    note: str = ""


def gpsl_field_covariance(x, y, density, params, cfg=None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # canonical argument order makes the estimate exactly symmetric
    if tuple(y) < tuple(x):
        x, y = y, x
    if density.total_mass == 0.0:
        return CovarianceResult(0.0, 0.0, False, "no mass, no collapses")
    cfg = cfg or QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=400_000,
                                  strategy="stratified_mc", seed=17)
    c = params.constants
    r_C = params.r_C
    comps, weights = [], []
    for m, ctr, s in density.components:
        if m > 0:
            comps.append(GaussianProposal(3, math.sqrt(r_C ** 2 + s ** 2), ctr))
            weights.append(m / density.total_mass)
    # Coulomb pieces absorb the 1/|x - z| and 1/|y - z| singularities;
    # their scale is set by the distance to the nearest lump
    ctrs = np.array([ct for m, ct, _ in density.components if m > 0])
    for p in (x, y):
        s = max(r_C, float(np.min(np.linalg.norm(ctrs - p, axis=1))))
        comps.append(CoulombProposal(p, s))
        weights.append(0.25)
    prop = MixtureProposal(comps, weights)

    def f(z):
        rx = np.sqrt(np.sum((z - x) ** 2, axis=1))
        ry = np.sqrt(np.sum((z - y) ** 2, axis=1))
        return density.smeared(z, r_C) / (rx * ry)

    res = integrate_nd_mc(f, prop, cfg)
    k = c.m0 * c.G ** 2 / params.gamma
    return CovarianceResult(k * res.value, k * res.error_estimate, False,
                            "" if res.converged else "not converged")


def td_dp_covariance(x, y, constants):
    """hbar G / (2 |x - y|); divergent on the diagonal."""
    d = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if d == 0.0:
        return CovarianceResult(math.inf, 0.0, True, "TD-DP variance diverges at x = y")
    return CovarianceResult(constants.hbar * constants.G / (2.0 * d))


def td_csl_covariance(x, y):
    """Always divergent: the V o V composition diverges at large |z|."""
    return CovarianceResult(math.inf, 0.0, True,
                            "TD-CSL covariance diverges (V o V grows without bound)")


def covariance_table(x, y, density, params, cfg=None):
    """Rows (model, value, error, divergent) for the off-diagonal and diagonal cases."""
    rows = []
    for label, a, b in (("off_diagonal", x, y), ("diagonal", x, x)):
        g = gpsl_field_covariance(a, b, density, params, cfg)
        dp = td_dp_covariance(a, b, params.constants)
        cs = td_csl_covariance(a, b)
        rows += [("GPSL", label, g), ("TD_DP", label, dp), ("TD_CSL", label, cs)]
    return rows

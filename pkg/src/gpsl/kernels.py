"""Physical constants, smearing kernels and the erf pair kernel."""

import math
from dataclasses import dataclass, field

import numpy as np

from .special import bessel_i0, bessel_i0e, erf

__all__ = [
    "PhysicalConstants", "ModelParams", "ParticleSpec", "TDParams",
    "gaussian_smear", "erf_kernel_f", "feedback_potential",
    "erf", "bessel_i0", "bessel_i0e",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
# below this fraction of r_C the pair kernel uses its Taylor expansion
_F_SERIES_CUT = 1e-6


@dataclass(frozen=True)
class PhysicalConstants:
    G: float = 6.67430e-11
    hbar: float = 1.054571817e-34
    m0: float = 1.67262192369e-27

    def __post_init__(self):
        for name in ("G", "hbar", "m0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")

    @classmethod
    def unit_free(cls, G=1.0):
        return cls(G=G, hbar=1.0, m0=1.0)


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    r_C: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not (math.isfinite(self.r_C) and self.r_C > 0):
            raise ValueError(f"r_C must be > 0, got {self.r_C}")

    @classmethod
    def unit_free(cls, gamma=1.0, r_C=1.0, G=1.0):
        return cls(gamma=gamma, r_C=r_C, constants=PhysicalConstants.unit_free(G=G))

    def collapse_rate(self, mass):
        """gamma * mass / m0, the total collapse rate of a body of given mass."""
        return self.gamma * mass / self.constants.m0

    def feedback_length(self, mass):
        c = self.constants
        return c.G * c.m0 * mass / (self.gamma * c.hbar)


@dataclass(frozen=True)
class ParticleSpec:
    mass: float

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ValueError(f"mass must be > 0, got {self.mass}")

    def r_p(self, params):
        # derived on demand so it always tracks params
        return params.feedback_length(self.mass)


@dataclass(frozen=True)
class TDParams:
    gamma_csl: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma_csl) and self.gamma_csl > 0):
            raise ValueError(f"gamma_csl must be > 0, got {self.gamma_csl}")


def _check_rc(r_C):
    if not (math.isfinite(r_C) and r_C > 0):
        raise ValueError(f"r_C must be finite and > 0, got {r_C}")


def _radius(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite position")
    if x.ndim >= 1 and x.shape[-1] == 3:
        return np.sqrt(np.sum(x * x, axis=-1))
    return np.abs(x)


def gaussian_smear(x, r_C):
    """Normalised 3D Gaussian of width r_C.

    `x` is either a radius (scalar/array) or an array of 3-vectors with
    the last axis of length 3.
    """
    _check_rc(r_C)
    r = _radius(x)
    out = (2.0 * math.pi * r_C * r_C) ** -1.5 * np.exp(-0.5 * (r / r_C) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def erf_kernel_f(x, r_C):
    """f(x) = erf(x / (r_C sqrt 2)) / x, with f(0) = sqrt(2/pi) / r_C."""
    _check_rc(r_C)
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("erf_kernel_f: non-finite radius")
    if np.any(arr < 0):
        raise ValueError("erf_kernel_f: radius must be >= 0")
    s = np.atleast_1d(arr) / r_C
    out = np.empty_like(s)
    small = s < _F_SERIES_CUT
    if np.any(small):
        out[small] = SQRT_2_OVER_PI * (1.0 - s[small] ** 2 / 6.0)
    if np.any(~small):
        sl = s[~small]
        out[~small] = erf(sl / math.sqrt(2.0)) / sl
    out /= r_C
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def feedback_potential(q_minus_x, mass, params):
    """Gravitational feedback energy -G m0 mass f(|q - x|) (always <= 0)."""
    c = params.constants
    r = _radius(q_minus_x)
    return -c.G * c.m0 * mass * erf_kernel_f(r, params.r_C)

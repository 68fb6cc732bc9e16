import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpsl.kernels import (ModelParams, ParticleSpec, PhysicalConstants, TDParams, erf_kernel_f,
                          feedback_potential, gaussian_smear)


def test_gaussian_normalised_by_radial_quadrature():
    val = mpmath.quad(lambda r: 4 * mpmath.pi * r * r * gaussian_smear(float(r), 0.7), [0, 3, mpmath.inf])
    assert abs(val - 1) < 1e-12


def test_gaussian_vector_and_radius_agree():
    v = np.array([[0.3, -0.4, 1.2]])
    assert gaussian_smear(v, 1.3)[0] == pytest.approx(gaussian_smear(1.3, 1.3), rel=1e-15)


def test_f_limits():
    assert erf_kernel_f(0.0, 1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)
    assert erf_kernel_f(math.sqrt(2.0), 1.0) == pytest.approx(float(mpmath.erf(1)) / math.sqrt(2), rel=1e-14)
    for x in (8.5, 12.0, 40.0):
        assert abs(erf_kernel_f(x, 1.0) * x - 1) < 1e-12


def test_f_continuous_across_series_cut():
    a = erf_kernel_f(np.array([0.999e-6, 1.001e-6]), 1.0)
    assert abs(a[0] - a[1]) < 1e-15


@given(st.floats(0, 20), st.floats(1e-3, 5))
def test_f_monotone(x, h):
    assert erf_kernel_f(x + h, 1.0) <= erf_kernel_f(x, 1.0)


def test_feedback_potential_newtonian_far():
    p = ModelParams.unit_free(G=0.3)
    v = feedback_potential(np.array([10.0, 0, 0]), 2.0, p)
    assert v == pytest.approx(-0.3 * 2.0 / 10.0, rel=1e-12)
    assert feedback_potential(0.0, 1.0, p) < 0


def test_validation():
    with pytest.raises(ValueError):
        ModelParams(gamma=-1, r_C=1)
    with pytest.raises(ValueError):
        ModelParams(gamma=1, r_C=0)
    with pytest.raises(ValueError):
        ParticleSpec(0.0)
    with pytest.raises(ValueError):
        TDParams(0.0)
    with pytest.raises(ValueError):
        PhysicalConstants(G=math.nan)
    with pytest.raises(ValueError):
        erf_kernel_f(-1.0, 1.0)


def test_r_p_and_rate():
    p = ModelParams.unit_free(gamma=2.0, G=0.5)
    part = ParticleSpec(3.0)
    assert part.r_p(p) == pytest.approx(0.5 * 3.0 / 2.0)
    assert p.collapse_rate(3.0) == 6.0

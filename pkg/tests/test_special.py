import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpsl.special import bessel_i0, bessel_i0e, erf

GRID = np.concatenate([np.linspace(-8, 8, 161), [1e-12, 2.9999, 3.0, 3.0001, 5.999, 6.0, 40.0]])


def test_erf_matches_mpmath():
    worst = max(abs(erf(x) - float(mpmath.erf(x))) for x in GRID)
    assert worst <= 1e-14


def test_erf_limits_and_array_shape():
    assert erf(math.inf) == 1.0 and erf(-math.inf) == -1.0
    assert erf(0.0) == 0.0
    a = np.linspace(-2, 2, 12).reshape(3, 4)
    assert erf(a).shape == (3, 4)


def test_erf_rejects_nan():
    with pytest.raises(ValueError):
        erf(float("nan"))


@given(st.floats(-50, 50))
def test_erf_odd(z):
    assert erf(-z) == -erf(z)


def test_i0_matches_mpmath():
    for z in np.concatenate([np.linspace(0, 60, 121), [0.5, 19.999, 20.0, 20.001, 300.0, 700.0]]):
        ref = float(mpmath.besseli(0, z))
        assert abs(bessel_i0(z) - ref) <= 1e-12 * ref


def test_i0e_matches_mpmath_far_out():
    for z in (1e3, 1e5, 1e8):
        ref = float(mpmath.besseli(0, z) * mpmath.exp(-z))
        assert abs(bessel_i0e(z) - ref) <= 1e-12 * ref


def test_i0_overflow_and_domain():
    with pytest.raises(OverflowError):
        bessel_i0(800.0)
    with pytest.raises(ValueError):
        bessel_i0(-1.0)


@settings(max_examples=60)
@given(st.floats(0, 200), st.floats(0.01, 10))
def test_i0_monotone(z, h):
    assert bessel_i0(z + h) >= bessel_i0(z)

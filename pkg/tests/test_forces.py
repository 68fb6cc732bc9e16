import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpsl import forces as fz
from gpsl.kernels import ModelParams, erf_kernel_f


@pytest.fixture
def params():
    return ModelParams.unit_free(gamma=1.0, r_C=1.0, G=1.0)


def test_exact_small_slope_against_mpmath():
    with mpmath.workdps(30):
        integ = mpmath.quad(lambda r: r * r * mpmath.exp(-r * r) * (
            mpmath.sqrt(mpmath.pi) * mpmath.erf(r) / r - 2 * mpmath.exp(-r * r)), [0, mpmath.inf])
        ref = 4 / (3 * mpmath.pi) * integ
    assert fz.SMALL_DR_SLOPE == pytest.approx(float(ref), rel=1e-14)


def test_small_and_large_asymptotes():
    assert fz.f_tilde_g(0.01) == pytest.approx(fz.SMALL_DR_SLOPE_QUOTED * 0.01, rel=0.05)
    assert fz.f_tilde_g(1e-3) == pytest.approx(fz.SMALL_DR_SLOPE * 1e-3, rel=1e-5)
    assert fz.f_tilde_g(10.0) == pytest.approx(0.5 / 100, rel=0.02)
    # the linear branch below 1e-6 joins the quadrature smoothly
    assert fz.f_tilde_g(1.0001e-6) / 1.0001e-6 == pytest.approx(fz.SMALL_DR_SLOPE, rel=1e-9)


@pytest.mark.parametrize("d_r", [0.3, 1.0, 2.0])
def test_reduced_force_matches_3d_mc(d_r):
    r = fz.f_tilde_g_mc(d_r)
    assert fz.f_tilde_g(d_r) == pytest.approx(r.value, rel=1e-2)
    assert abs(fz.f_tilde_g(d_r) - r.value) < 3 * r.error_estimate + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 30.0))
def test_reduced_force_odd_and_nonnegative(d):
    v = fz.f_tilde_g(d)
    assert v >= 0.0
    assert fz.f_tilde_g(-d) == -v


def test_impulse_kernel_is_minus_gradient_of_f():
    y = np.array([[0.3, -0.2, 0.5], [1.5, 0.4, -2.0], [1e-3, 0, 0]])
    h = 1e-6
    for yy in y:
        grad = np.array([(erf_kernel_f(np.linalg.norm(yy + h * e), 1.0)
                          - erf_kernel_f(np.linalg.norm(yy - h * e), 1.0)) / (2 * h)
                         for e in np.eye(3)])
        assert np.allclose(fz.impulse_kernel(yy[None], 1.0)[0], -grad, rtol=1e-6, atol=1e-9)


def test_antisymmetry_exact(params):
    for s in (0.5, 3.0, 40.0):
        pair = fz.PairConfiguration(1.0, 3.0, (0.1, 0.2, 0.3), (s, -1.0, 0.5))
        a = fz.average_force(pair, params).components
        b = fz.average_force(pair.swapped(), params).components
        assert np.all(np.abs(a + b) <= 1e-12 * np.linalg.norm(a))


def test_coincident_pair_has_no_force(params):
    pair = fz.PairConfiguration(1.0, 1.0, (0, 0, 0), (0, 0, 0))
    assert fz.average_force(pair, params).norm == 0.0


def test_newton_limit_monotone(params):
    ratios = []
    for d in (5.0, 10.0, 20.0, 50.0, 100.0):
        pair = fz.PairConfiguration(2.0, 3.0, (d, 0, 0), (0, 0, 0))
        ratios.append(fz.average_force(pair, params).norm / (6.0 / d ** 2))
    assert abs(ratios[-1] - 1) < 1e-2
    gaps = np.abs(1 - np.array(ratios))
    # beyond ~20 r_C the ratio is 1 to rounding
    assert np.all(np.diff(gaps) <= 1e-14)


def test_force_points_toward_partner(params):
    pair = fz.PairConfiguration(1.0, 1.0, (4.0, 0, 0), (0, 0, 0))
    # force on k points from k toward j
    assert fz.average_force(pair, params).components[0] > 0


def test_spread_pair_reduces_to_point_limit(params):
    pair = fz.PairConfiguration(1.0, 1.0, (3.0, 0, 0), (0, 0, 0), s_j=1e-4)
    point = fz.average_force(fz.PairConfiguration(1.0, 1.0, (3.0, 0, 0), (0, 0, 0)), params)
    spread = fz.average_force(pair, params)
    assert abs(spread.components[0] - point.components[0]) < 3 * spread.error[0] + 1e-3 * point.norm


def test_mc_impulse_symmetric_pair_conserves_momentum(params):
    pair = fz.PairConfiguration(1.0, 1.0, (-2.5, 0, 0), (2.5, 0, 0))
    r = fz.mc_mean_impulse(pair, 100_000, 1, params)
    assert np.all(np.abs(r.total.components) <= 3 * r.total.error)


def test_mc_impulse_matches_average_force(params):
    pair = fz.PairConfiguration(1.0, 1.0, (5.0, 0, 0), (0, 0, 0))
    r = fz.mc_mean_impulse(pair, 100_000, 2, params)
    M = 2.0
    # mean impulse per collapse * collapse rate gamma M/m0 = mean force
    on_k = r.per_particle[1].components * params.gamma * M / params.constants.m0
    f = fz.average_force(pair, params).components
    err = r.per_particle[1].error * params.gamma * M
    assert np.all(np.abs(on_k - f) <= 3 * err + 1e-15)


def test_mc_impulse_single_particle_isotropic(params):
    # a tiny partner far away leaves only the self term
    pair = fz.PairConfiguration(1.0, 1e-12, (0, 0, 0), (1e3, 0, 0))
    r = fz.mc_mean_impulse(pair, 50_000, 3, params)
    assert np.all(np.abs(r.per_particle[0].components) <= 3 * r.per_particle[0].error)


def test_mc_impulse_deterministic_and_worker_independent(params):
    pair = fz.PairConfiguration(1.0, 2.0, (1.0, 0, 0), (0, 0, 0))
    a = fz.mc_mean_impulse(pair, 70_000, 5, params)
    b = fz.mc_mean_impulse(pair, 70_000, 5, params, workers=4)
    assert np.array_equal(a.total.components, b.total.components)
    with pytest.raises(ValueError):
        fz.mc_mean_impulse(pair, 100, 5, params)


def test_pair_potential(params):
    for d in (0.5, 2.0, 20.0):
        q = fz.effective_pair_potential(d, 1.0, 3.0, params)
        assert q == pytest.approx(fz.effective_pair_potential_exact(d, 1.0, 3.0, params), rel=1e-12)
    assert fz.effective_pair_potential(20.0, 1.0, 3.0, params) == pytest.approx(-3.0 / 20.0, rel=1e-4)
    v0 = fz.effective_pair_potential(0.0, 1.0, 3.0, params)
    assert v0 == pytest.approx(-3.0 / math.sqrt(math.pi), rel=1e-12)
    ds = np.linspace(0.0, 10.0, 30)
    vals = [fz.effective_pair_potential(d, 1.0, 1.0, params) for d in ds]
    assert np.all(np.diff(vals) > 0)

import math

import numpy as np
import pytest

from gpsl.quadrature import (BoxProposal, CoulombProposal, GaussianProposal, IntegrationError,
                             MixtureProposal, QuadratureConfig, integrate_1d, integrate_nd_mc)


def test_1d_polynomial_exact():
    r = integrate_1d(lambda x: x * x, 0.0, 3.0)
    assert r.value == pytest.approx(9.0, rel=1e-14) and r.converged


def test_1d_infinite_range():
    r = integrate_1d(lambda x: np.exp(-x * x), 0.0, math.inf)
    assert r.value == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)


def test_1d_oscillatory_against_reference():
    # mpmath: quad(sin(10x) exp(-x^2), [0, inf])
    r = integrate_1d(lambda x: np.sin(10 * x) * np.exp(-x * x), 0.0, math.inf)
    assert r.value == pytest.approx(0.10213407442427683, abs=1e-10)


def test_ball_volume_plain_and_stratified():
    for strat in ("plain_mc", "stratified_mc"):
        cfg = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=200_000, strategy=strat, seed=3)
        r = integrate_nd_mc(lambda z: (np.sum(z * z, axis=1) < 1).astype(float),
                            BoxProposal([-1] * 3, [1] * 3), cfg)
        assert abs(r.value - 4 * math.pi / 3) < 4 * r.error_estimate


@pytest.mark.parametrize("D", [0.5, 1.0, 2.0, 5.0])
def test_coulomb_identity(D):
    vec = np.array([0.0, 0.0, D])

    def f(z):
        a = np.sqrt(np.sum(z * z, axis=1))
        b = np.sqrt(np.sum((z + vec) ** 2, axis=1))
        return (1 / a - 1 / b) ** 2

    prop = MixtureProposal([CoulombProposal((0, 0, 0), D), CoulombProposal(-vec, D)], [0.5, 0.5])
    cfg = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=400_000, strategy="stratified_mc")
    r = integrate_nd_mc(f, prop, cfg)
    assert abs(r.value - 4 * math.pi * D) < 3 * r.error_estimate


def test_worker_count_does_not_change_result():
    cfg = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=300_000, strategy="stratified_mc", seed=9)
    f = lambda z: np.exp(-np.sum(z * z, axis=1)) * np.cos(z[:, 0])
    a = integrate_nd_mc(f, GaussianProposal(3, 1.0), cfg)
    b = integrate_nd_mc(f, GaussianProposal(3, 1.0), cfg.replace(workers=4))
    assert a == b


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(strategy="nope")
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0)
    with pytest.raises(ValueError):
        QuadratureConfig(workers=0)


def test_nonfinite_integrand_raises():
    with pytest.raises(IntegrationError):
        integrate_1d(lambda x: np.where(x > 0.5, np.nan, 1.0), 0.0, 1.0)

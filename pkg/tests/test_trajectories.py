import math

import numpy as np
import pytest

from gpsl import trajectories as tr
from gpsl.kernels import ModelParams, ParticleSpec
from gpsl.quadrature import substream
from gpsl.single_particle import gamma_gpsl_perturbative


def _cfg(params, n=4000, **kw):
    base = dict(dt=0.01, t_final=3.0, n_trajectories=n, seed=11, particle=ParticleSpec(1.0),
                params=params)
    base.update(kw)
    return tr.TrajectoryConfig(**base)


def test_state_validation():
    with pytest.raises(ValueError):
        tr.LatticeState([[0, 0, 0]], [1.0])
    with pytest.raises(ValueError):
        tr.LatticeState([[0, 0, 0], [1, 0, 0]], [1.0, 1.0])
    s = tr.LatticeState.two_site(1.0, 1.0)
    assert np.linalg.norm(s.sites[1] - s.sites[0]) == pytest.approx(2.0)


def test_dt_bound(unit):
    with pytest.raises(ValueError):
        _cfg(unit, dt=0.02)
    with pytest.raises(ValueError):
        _cfg(unit, sampler="leapfrog")


def test_step_no_collapse_keeps_state(unit):
    s = tr.LatticeState.two_site(1.0, 1.0)

    class Never:
        def random(self):
            return 0.99

    new, ev = tr.step(s, 0.01, Never(), ParticleSpec(1.0), unit)
    assert ev is None and new is s


def test_step_norm_preserved(unit):
    rng = substream(1, (99, 0))
    sites = np.array([[0, 0, 0], [1.3, 0, 0], [0, 2.0, 0.5], [4.0, 1.0, 0]])
    s = tr.LatticeState.normalized(sites, [1, 1j, 0.5, -0.2])
    n_coll = 0
    for _ in range(3000):
        s, ev = tr.step(s, 0.01, rng, ParticleSpec(1.0), unit)
        n_coll += ev is not None
        assert abs(np.linalg.norm(s.amplitudes) - 1) <= 1e-12
    assert n_coll > 0


def test_one_site_state_probabilities_unchanged(unit):
    rng = substream(2, (99, 0))
    s = tr.LatticeState([[0, 0, 0], [3.0, 0, 0]], [1.0, 0.0])
    for _ in range(2000):
        s, _ = tr.step(s, 0.01, rng, ParticleSpec(1.0), unit)
    assert np.array_equal(s.probabilities, [1.0, 0.0])


def test_zero_weight_collapse_aborts():
    # all amplitude on a site 1e4 r_C from the collapse centre underflows to zero
    sites = np.array([[0.0, 0, 0], [1e4, 0, 0]])
    psi = np.array([1.0, 0.0], complex)
    with pytest.raises(tr.TrajectoryAbort):
        tr._collapse(psi, sites, 0.0, np.array([1e4, 0, 0]), 1.0, 0.0, False)


def test_fit_recovers_synthetic_exponential():
    t = np.linspace(0, 5, 30)
    slope, icpt, worst = tr.fit_decay(t, 0.5 * np.exp(-0.731 * t))
    assert -slope == pytest.approx(0.731, rel=1e-10)
    assert worst == 0.0


def test_fit_warns_on_non_exponential():
    t = np.linspace(0, 5, 30)
    m = 0.5 * np.exp(-t) * (1 + 0.3 * np.sin(3 * t))
    res = tr.EnsembleResult(t, np.tile(m[:, None, None], (1, 2, 2)).astype(complex),
                            np.full((30, 2, 2), 1e-4), np.zeros((30, 2, 2)),
                            np.tile(m[None, :, None, None], (4, 1, 2, 2)).astype(complex),
                            np.zeros(4, int), 0.01, "event")
    with pytest.warns(tr.FitQualityWarning):
        tr.decay_rate_fit(res)


def test_deterministic_and_worker_independent(unit):
    s = tr.LatticeState.two_site(1.0, 1.0)
    a = tr.run_ensemble(_cfg(unit, n=600), s)
    b = tr.run_ensemble(_cfg(unit, n=600, workers=4), s)
    assert np.array_equal(a.rho_mean, b.rho_mean)
    assert np.array_equal(a.collapse_counts, b.collapse_counts)


def test_diagonal_conserved_and_phase_zero(unit):
    res = tr.run_ensemble(_cfg(unit, n=4000), tr.LatticeState.two_site(1.0, 1.0))
    diag = res.rho_mean[:, [0, 1], [0, 1]]
    assert np.allclose(diag.imag, 0.0)
    assert np.allclose(diag.real.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(np.abs(diag.real - 0.5) <= 4 * res.rho_se_re[:, [0, 1], [0, 1]] + 1e-15)
    assert np.all(np.abs(res.rho_mean[:, 0, 1].imag) <= 4 * res.rho_se_im[:, 0, 1] + 1e-15)


def test_gravity_off_collapse_only_rate():
    p = ModelParams.unit_free(G=0.1)
    res = tr.run_ensemble(_cfg(p, n=6000, t_final=2.0, gravity_on=False), tr.LatticeState.two_site(2.0, 1.0))
    fit = tr.decay_rate_fit(res)
    assert abs(fit.rate - (1 - math.exp(-2.0))) <= 3 * fit.stderr


def test_stepped_and_event_samplers_agree(unit):
    s = tr.LatticeState.two_site(1.0, 1.0)
    a = tr.decay_rate_fit(tr.run_ensemble(_cfg(unit, n=6000), s))
    b = tr.decay_rate_fit(tr.run_ensemble(_cfg(unit, n=6000, sampler="event"), s))
    assert abs(a.rate - b.rate) <= 3 * math.hypot(a.stderr, b.stderr)


def test_gravity_term_resolved_with_common_random_numbers():
    p = ModelParams.unit_free(G=0.05)
    s = tr.LatticeState.two_site(1.0, 1.0)
    on = tr.run_ensemble(_cfg(p, n=10_000, seed=3), s)
    off = tr.run_ensemble(_cfg(p, n=10_000, seed=3, gravity_on=False), s)
    diff, se = tr.paired_rate_difference(on, off)
    expect = gamma_gpsl_perturbative(1.0, ParticleSpec(1.0), p).gravity_part
    assert abs(diff - expect) <= 3 * se


def test_site_energies_rotate_coherence(unit):
    s = tr.LatticeState.two_site(1.0, 1.0)
    a = tr.run_ensemble(_cfg(unit, n=300), s)
    b = tr.run_ensemble(_cfg(unit, n=300, site_energies=(0.0, 2.0)), s)
    assert np.allclose(np.abs(a.rho_mean), np.abs(b.rho_mean))
    assert np.allclose(b.rho_mean[:, 0, 1], a.rho_mean[:, 0, 1] * np.exp(2j * a.times))


def test_count_and_location_statistics(unit):
    cfg = _cfg(unit, n=10_000, t_final=10.0, sampler="event", record_events=True)
    state = tr.LatticeState([[0, 0, 0], [5.0, 0, 0]], [1.0, 0.0])
    res = tr.run_ensemble(cfg, state)
    _, _, p = tr.collapse_count_test(res.collapse_counts, 10.0)
    assert p > 0.01
    assert len(res.events) >= 100_000 * 0.95
    _, pk = tr.collapse_location_test(res.events, state.sites, 1.0)
    assert pk > 0.01


def test_count_test_rejects_wrong_mean():
    rng = np.random.default_rng(0)
    counts = rng.poisson(3.0, 10_000)
    assert tr.collapse_count_test(counts, 3.0)[2] > 0.01
    assert tr.collapse_count_test(counts, 3.3)[2] < 0.01

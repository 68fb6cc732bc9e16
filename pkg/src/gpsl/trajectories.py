"""Jump-trajectory simulator for one particle on a set of discrete sites.

Between collapses nothing happens (the drift term vanishes for a single
particle and the free Hamiltonian is off unless site energies are given).
A collapse picks site i with probability |psi_i|^2, places the collapse
centre at x_c = q_i + r_C N(0, I), and multiplies every amplitude by
sqrt(g_rC(q_j - x_c)) exp(i r_p f(|q_j - x_c|)) before renormalising.

Each trajectory owns a counter-based random stream keyed by
(seed, trajectory index), and ensemble sums are formed per fixed batch, so
results do not depend on the number of worker threads.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .kernels import ModelParams, ParticleSpec, erf_kernel_f
from .quadrature import substream

MAX_RATE_DT = 0.01
NORM_TOL = 1e-12
N_BATCHES = 40
SAMPLERS = ("stepped", "event")


class TrajectoryAbort(RuntimeError):
    pass


class FitQualityWarning(UserWarning):
    pass


@dataclass
class LatticeState:
    sites: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        self.sites = np.atleast_2d(np.asarray(self.sites, dtype=float))
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        if self.sites.shape[1] != 3 or self.sites.shape[0] != self.amplitudes.size:
            raise ValueError("need one 3D site per amplitude")
        if self.sites.shape[0] < 2:
            raise ValueError("a lattice state needs at least 2 sites")
        n = np.linalg.norm(self.amplitudes)
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalised (|psi| = {n!r})")

    @classmethod
    def normalized(cls, sites, amplitudes):
        a = np.asarray(amplitudes, dtype=complex)
        return cls(sites, a / np.linalg.norm(a))

    @classmethod
    def two_site(cls, d_tilde, r_C, weights=(1.0, 1.0)):
        """Superposition of two sites on the z axis, |x - y| = 2 d~ r_C apart.

        `weights` are the site probabilities before normalisation.
        """
        sep = 2.0 * d_tilde * r_C
        sites = np.array([[0.0, 0.0, -0.5 * sep], [0.0, 0.0, 0.5 * sep]])
        return cls.normalized(sites, np.sqrt(np.asarray(weights, float)))

    @property
    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def density_matrix(self):
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class CollapseEvent:
    time: float
    site: int
    x_c: tuple


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float
    t_final: float
    n_trajectories: int
    seed: int
    particle: ParticleSpec
    params: ModelParams
    gravity_on: bool = True
    sampler: str = "stepped"
    n_times: int = 31
    workers: int = 1
    record_events: bool = False
    site_energies: tuple = None

    def __post_init__(self):
        if not (self.dt > 0 and self.t_final > 0 and self.n_trajectories >= 1):
            raise ValueError("dt, t_final and n_trajectories must be positive")
        lam = self.params.collapse_rate(self.particle.mass)
        if lam * self.dt > MAX_RATE_DT * (1 + 1e-12):
            raise ValueError(
                f"dt * gamma m_p/m0 = {lam * self.dt:.3g} exceeds {MAX_RATE_DT} "
                "(at most one collapse per step)")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")
        if self.n_times < 2:
            raise ValueError("n_times must be >= 2")

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def grid(self):
        """Recording times, all multiples of dt."""
        idx = np.unique(np.round(np.linspace(0, self.n_steps, self.n_times)).astype(int))
        return idx, idx * self.dt


@dataclass
class EnsembleResult:
    times: np.ndarray
    rho_mean: np.ndarray          # (n_t, n, n) complex
    rho_se_re: np.ndarray
    rho_se_im: np.ndarray
    batch_means: np.ndarray       # (n_batches, n_t, n, n) complex
    collapse_counts: np.ndarray
    dt: float
    sampler: str
    n_aborted: int = 0
    events: list = field(default_factory=list)

    @property
    def rho_se(self):
        return np.hypot(self.rho_se_re, self.rho_se_im)


def _collapse(psi, sites, u_site, z, r_C, r_p, gravity_on):
    """Apply one collapse given its random inputs; returns (psi, site, x_c)."""
    p = np.abs(psi) ** 2
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, u_site * cdf[-1], side="right"))
    i = min(i, len(psi) - 1)
    x_c = sites[i] + r_C * z
    r = np.sqrt(np.sum((sites - x_c) ** 2, axis=1))
    logw = -(r * r) / (4.0 * r_C * r_C)
    # sqrt of the Gaussian in log space; the constant drops out on renormalising
    w = np.exp(logw - logw.max())
    new = psi * w
    if gravity_on and r_p != 0.0:
        new = new * np.exp(1j * r_p * erf_kernel_f(r, r_C))
    nrm = np.linalg.norm(new)
    if not nrm > 0 or not math.isfinite(nrm):
        raise TrajectoryAbort(f"state vanished after collapse at site {i}")
    new = new / nrm
    if abs(np.linalg.norm(new) - 1.0) > NORM_TOL:
        raise TrajectoryAbort("norm drift beyond tolerance")
    return new, i, x_c


def step(state, dt, rng, particle, params, gravity_on=True):
    """Advance one time step. Returns (new_state, CollapseEvent or None)."""
    lam = params.collapse_rate(particle.mass)
    if lam * dt > MAX_RATE_DT * (1 + 1e-12):
        raise ValueError("dt too large for the one-collapse-per-step bound")
    if rng.random() >= lam * dt:
        return state, None
    u = rng.random()
    z = rng.standard_normal(3)
    psi, i, x_c = _collapse(state.amplitudes, state.sites, u, z, params.r_C,
                            particle.r_p(params), gravity_on)
    return LatticeState(state.sites, psi), CollapseEvent(dt, i, tuple(x_c))


def _collapse_times(cfg, rng, lam):
    if cfg.sampler == "stepped":
        hits = np.flatnonzero(rng.random(cfg.n_steps) < lam * cfg.dt)
        # a collapse in step k lands at the end of that step
        return (hits + 1) * cfg.dt, hits + 1
    times = []
    t = rng.exponential(1.0 / lam)
    while t <= cfg.t_final:
        times.append(t)
        t += rng.exponential(1.0 / lam)
    times = np.array(times)
    return times, times / cfg.dt


def _run_one(k, cfg, initial, grid_idx):
    lam = cfg.params.collapse_rate(cfg.particle.mass)
    rng = substream(cfg.seed, (4 if cfg.sampler == "stepped" else 5, k))
    times, pos = _collapse_times(cfg, rng, lam)
    n_c = len(times)
    us = rng.random(n_c)
    zs = rng.standard_normal((n_c, 3))
    r_C = cfg.params.r_C
    r_p = cfg.particle.r_p(cfg.params)
    psi = initial.amplitudes.copy()
    out = np.empty((len(grid_idx), psi.size), dtype=complex)
    events = [] if cfg.record_events else None
    c = 0
    for g, gi in enumerate(grid_idx):
        while c < n_c and pos[c] <= gi + 1e-9:
            psi, i, x_c = _collapse(psi, initial.sites, us[c], zs[c], r_C, r_p, cfg.gravity_on)
            if events is not None:
                events.append((k, float(times[c]), i, tuple(x_c)))
            c += 1
        out[g] = psi
    return out, n_c, events


def _run_batch(b, cfg, initial, grid_idx, bounds):
    lo, hi = bounds[b], bounds[b + 1]
    n_t = len(grid_idx)
    n = initial.amplitudes.size
    acc = np.zeros((hi - lo, n_t, n, n), dtype=complex)
    counts = np.zeros(hi - lo, dtype=np.int64)
    events = []
    aborted = 0
    keep = np.ones(hi - lo, dtype=bool)
    for j, k in enumerate(range(lo, hi)):
        try:
            psi_t, n_c, ev = _run_one(k, cfg, initial, grid_idx)
        except TrajectoryAbort:
            aborted += 1
            keep[j] = False
            continue
        acc[j] = psi_t[:, :, None] * psi_t[:, None, :].conj()
        counts[j] = n_c
        if ev:
            events.extend(ev)
    acc = acc[keep]
    # pairwise (numpy) summation over the fixed batch membership
    s1 = acc.sum(axis=0)
    s2r = (acc.real ** 2).sum(axis=0)
    s2i = (acc.imag ** 2).sum(axis=0)
    return s1, s2r, s2i, int(keep.sum()), counts, events, aborted


def run_ensemble(cfg, initial):
    """Average rho over cfg.n_trajectories independent trajectories."""
    grid_idx, times = cfg.grid()
    n_tr = cfg.n_trajectories
    nb = min(N_BATCHES, n_tr)
    bounds = [b * n_tr // nb for b in range(nb + 1)]
    run = lambda b: _run_batch(b, cfg, initial, grid_idx, bounds)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(run, range(nb)))
    else:
        parts = [run(b) for b in range(nb)]
    n_ok = sum(p[3] for p in parts)
    if n_ok == 0:
        raise TrajectoryAbort("every trajectory aborted")
    s1 = np.sum(np.stack([p[0] for p in parts]), axis=0)
    s2r = np.sum(np.stack([p[1] for p in parts]), axis=0)
    s2i = np.sum(np.stack([p[2] for p in parts]), axis=0)
    mean = s1 / n_ok
    var_r = np.maximum(s2r / n_ok - mean.real ** 2, 0.0)
    var_i = np.maximum(s2i / n_ok - mean.imag ** 2, 0.0)
    denom = max(n_ok - 1, 1)
    batch_means = np.stack([p[0] / max(p[3], 1) for p in parts])
    counts = np.concatenate([p[4] for p in parts])
    events = [e for p in parts for e in p[5]]
    if cfg.site_energies is not None:
        # diagonal Hamiltonian commutes with the collapses: exact phases
        E = np.asarray(cfg.site_energies, float) / cfg.params.constants.hbar
        ph = np.exp(-1j * np.subtract.outer(E, E)[None] * times[:, None, None])
        mean = mean * ph
        batch_means = batch_means * ph[None]
    return EnsembleResult(times, mean, np.sqrt(var_r / denom), np.sqrt(var_i / denom),
                          batch_means, counts, cfg.dt, cfg.sampler,
                          sum(p[6] for p in parts), events)


@dataclass(frozen=True)
class RateFit:
    rate: float
    stderr: float
    raw_slope: float
    n_points: int
    max_residual_sigma: float


def fit_decay(times, values, se=None, dt=None):
    """Weighted least squares of log|values| against time.

    Returns (slope, intercept, max |residual|/sigma). With se = None or all
    zeros the fit is unweighted.
    """
    t = np.asarray(times, float)
    v = np.abs(np.asarray(values))
    y = np.log(v)
    if se is None or not np.any(np.asarray(se) > 0):
        w = np.ones_like(t)
        sig = None
    else:
        sig = np.asarray(se, float) / v
        # exact points (e.g. t = 0) get the weight of the best measured one
        sig = np.maximum(sig, sig[sig > 0].min())
        w = 1.0 / sig ** 2
    W = w.sum()
    tm = (w * t).sum() / W
    ym = (w * y).sum() / W
    slope = (w * (t - tm) * (y - ym)).sum() / (w * (t - tm) ** 2).sum()
    icpt = ym - slope * tm
    resid = y - (icpt + slope * t)
    worst = float(np.max(np.abs(resid) / sig)) if sig is not None else 0.0
    return slope, icpt, worst


def _slope_to_rate(slope, dt, sampler):
    # Bernoulli stepping makes the mean decay as (1 - Gamma dt)^n exactly
    if sampler == "stepped" and dt:
        return (1.0 - math.exp(slope * dt)) / dt
    return -slope


def _usable(result, pair, min_snr):
    i, j = pair
    m = result.rho_mean[:, i, j]
    se = result.rho_se[:, i, j]
    use = np.abs(m) > min_snr * se
    if np.all(se == 0):
        use = np.abs(m) > 0
    if use.sum() < 10:
        raise ValueError(f"need >= 10 usable time points, have {int(use.sum())}")
    return use


def _loo_rates(result, pair, use):
    """Leave-one-batch-out rates (nan where a batch leaves a zero entry)."""
    i, j = pair
    se = result.rho_se[use, i, j]
    t = result.times[use]
    bm = result.batch_means[:, use, i, j]
    nb = bm.shape[0]
    tot = bm.sum(axis=0)
    out = np.full(nb, np.nan)
    for b in range(nb):
        mb = (tot - bm[b]) / (nb - 1)
        if np.all(np.abs(mb) > 0):
            out[b] = _slope_to_rate(fit_decay(t, mb, se)[0], result.dt, result.sampler)
    return out


def _jackknife_se(loo):
    loo = loo[np.isfinite(loo)]
    n = len(loo)
    if n < 2:
        return 0.0
    return float(math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def decay_rate_fit(result, pair=(0, 1), min_snr=5.0, use=None):
    """Decay rate of |rho_ij(t)| with a jackknife error over trajectory batches.

    Only times where |rho_ij| exceeds min_snr standard errors enter the fit.
    """
    i, j = pair
    if use is None:
        use = _usable(result, pair, min_snr)
    m = result.rho_mean[use, i, j]
    se = result.rho_se[use, i, j]
    slope, _, worst = fit_decay(result.times[use], m, se)
    rate = _slope_to_rate(slope, result.dt, result.sampler)
    stderr = _jackknife_se(_loo_rates(result, pair, use))
    if worst > 5.0:
        warnings.warn(f"decay fit residual reaches {worst:.1f} sigma; "
                      "|rho| may not be a single exponential", FitQualityWarning)
    return RateFit(rate, stderr, float(slope), int(use.sum()), worst)


def paired_rate_difference(res_a, res_b, pair=(0, 1), min_snr=5.0):
    """rate(a) - rate(b) for two ensembles run with the same seed.

    Common random numbers make the batches paired, so the jackknife of the
    difference is much tighter than the two errors combined.
    Returns (difference, stderr).
    """
    if res_a.batch_means.shape != res_b.batch_means.shape or not np.array_equal(res_a.times, res_b.times):
        raise ValueError("ensembles are not paired (different grids or batches)")
    use = _usable(res_a, pair, min_snr) & _usable(res_b, pair, min_snr)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FitQualityWarning)
        diff = decay_rate_fit(res_a, pair, use=use).rate - decay_rate_fit(res_b, pair, use=use).rate
    loo = _loo_rates(res_a, pair, use) - _loo_rates(res_b, pair, use)
    return diff, _jackknife_se(loo)


def collapse_count_test(counts, mean):
    """Chi-squared goodness of fit of collapse counts to Poisson(mean).

    Bins with expected count < 5 are merged into the tails. Returns
    (statistic, dof, p_value).
    """
    counts = np.asarray(counts, int)
    n = counts.size
    kmax = int(counts.max()) + 1
    k = np.arange(kmax + 1)
    probs = stats.poisson.pmf(k, mean)
    probs[-1] = stats.poisson.sf(kmax - 1, mean)
    obs = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1).astype(float)
    exp = probs * n
    # merge low-expectation bins from both ends toward the mode
    o_bins, e_bins = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= 5.0:
            o_bins.append(acc_o)
            e_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0:
        o_bins[-1] += acc_o
        e_bins[-1] += acc_e
    o_bins, e_bins = np.array(o_bins), np.array(e_bins)
    stat = float(np.sum((o_bins - e_bins) ** 2 / e_bins))
    dof = len(o_bins) - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def collapse_location_test(events, sites, r_C):
    """KS test of |x_c - q_site|/r_C against the chi(3) law of g_rC."""
    sites = np.asarray(sites, float)
    r = np.array([np.linalg.norm(np.asarray(x) - sites[i]) for _, _, i, x in events]) / r_C
    res = stats.kstest(r, stats.chi(3).cdf)
    return float(res.statistic), float(res.pvalue)

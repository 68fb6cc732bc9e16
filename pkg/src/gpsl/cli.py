"""Command-line interface: curves as CSV + SVG, oracle gates, simulations.

Every command takes its parameters from (defaults, then a flat
``key = value`` config file, then GPSL_SEED, then flags). Each CSV starts
with one '#' line holding the resolved configuration as JSON.

Exit codes: 0 ok, 2 usage/config error, 3 numerical non-convergence,
4 oracle gate failed.
"""

import argparse
import csv
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from . import forces as fz
from . import rigid_sphere as rs
from . import single_particle as sp
from . import trajectories as tr
from .fluctuations import MassDensityField, covariance_table
from .kernels import ModelParams, ParticleSpec, PhysicalConstants, TDParams
from .quadrature import (CoulombProposal, IntegrationError, MixtureProposal, QuadratureConfig,
                         integrate_nd_mc)
from .svg import LinePlot

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_GATE = 0, 2, 3, 4

# keys that only affect where/how fast things run, not the numbers
RUNTIME_KEYS = ("out", "workers", "config")

COMMON = {
    "out": ".",
    "seed": 0,
    "workers": 1,
    "units": "unit_free",     # unit_free or si
    "gamma": 1.0,
    "r_C": 1.0,
    "G": None,                # None -> 1 in unit-free mode, CODATA in SI
    "hbar": None,
    "m0": None,
}

DEFAULTS = {
    "ftilde": {
        "seed": 20240601, "d_min": 0.0, "d_max": 6.0, "d_step": 0.05,
        "max_evals": 2 * 40 ** 4, "abs_tol": 1e-4, "rel_tol": 0.05,
        "fit_lo": 0.01, "fit_hi": 0.3, "tail_lo": 3.5, "tail_hi": 6.0,
    },
    "decoherence": {
        "models": "GPSL_perturbative,TD_DP", "mass": 1.0, "G": 0.1, "gamma_csl": None,
        "d_min": 0.0, "d_max": 10.0, "d_step": 0.1, "max_evals": 200_000,
        "plateau_d": 50.0,
    },
    "sphere": {
        "x_min": 0.0, "x_max": 1.5, "x_step": 0.01, "form": "quoted",
        "mode": "kernels", "mass": None, "radius": None, "gamma_csl": None,
        "balance_mu0": 100.0, "balance_gamma": 1e-9,
    },
    "force": {
        "dr_min": 0.01, "dr_max": 20.0, "n_points": 60,
        "pair_separations": "0.5,2,5,20,100",
    },
    "covariance": {
        "x": "5,0,0", "y": "-5,0,0", "density": "1@0,0,-2;1@0,0,2",
        "max_evals": 400_000,
    },
    "simulate": {
        "d_tilde": 1.0, "mass": 1.0, "G": 0.1, "n_trajectories": 10_000,
        "dt": 0.01, "t_final": 3.0, "n_times": 31, "sampler": "stepped",
        "gravity": True, "gate_sigma": 3.0,
    },
    "check": {
        "max_evals": 400_000,
    },
}


class UsageError(Exception):
    pass


class GateFailure(Exception):
    pass


class NotConverged(Exception):
    pass


# ------------------------------------------------------------- config

def parse_config_file(path):
    """Flat `key = value` file with '#' comments."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k] = v
    return out


def _convert(key, raw, default):
    if raw is None or not isinstance(raw, str):
        return raw
    if raw.lower() in ("none", ""):
        return None
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, str):
            return raw
        # floats, and the numeric keys whose default is None
        return float(raw)
    except ValueError:
        raise UsageError(f"bad value for {key}: {raw!r}") from None


def resolve(command, file_values=None, flag_values=None, env=None):
    """Merge defaults < config file < GPSL_SEED < flags."""
    defaults = dict(COMMON)
    defaults.update(DEFAULTS[command])
    cfg = dict(defaults)
    for src in (file_values or {},):
        for k, v in src.items():
            if k not in defaults:
                raise UsageError(f"unknown config key {k!r} for {command}")
            cfg[k] = _convert(k, v, defaults[k])
    env = os.environ if env is None else env
    if env.get("GPSL_SEED", "").strip():
        cfg["seed"] = _convert("seed", env["GPSL_SEED"], 0)
    for k, v in (flag_values or {}).items():
        if v is not None:
            cfg[k] = _convert(k, v, defaults[k])
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise UsageError("seed must be a non-negative integer")
    if not isinstance(cfg["workers"], int) or cfg["workers"] < 1:
        raise UsageError("workers must be >= 1")
    return cfg


def model_params(cfg):
    if cfg["units"] == "unit_free":
        base = PhysicalConstants.unit_free()
    elif cfg["units"] == "si":
        base = PhysicalConstants()
    else:
        raise UsageError("units must be unit_free or si")
    consts = PhysicalConstants(
        G=base.G if cfg["G"] is None else cfg["G"],
        hbar=base.hbar if cfg["hbar"] is None else cfg["hbar"],
        m0=base.m0 if cfg["m0"] is None else cfg["m0"])
    return ModelParams(cfg["gamma"], cfg["r_C"], consts)


# -------------------------------------------------------------- output

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(cfg, name, header, rows):
    meta = {k: v for k, v in sorted(cfg.items()) if k not in RUNTIME_KEYS}
    meta["version"] = __version__
    path = os.path.join(cfg["out"], name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    return path


def _grid(lo, hi, step):
    if step <= 0 or hi < lo:
        raise UsageError("need step > 0 and max >= min")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(n + 1), 12)


def _vec(s):
    try:
        v = [float(a) for a in str(s).split(",")]
    except ValueError:
        raise UsageError(f"bad 3-vector {s!r}") from None
    if len(v) != 3:
        raise UsageError(f"bad 3-vector {s!r}")
    return v


def _density(s):
    items = []
    for part in str(s).split(";"):
        part = part.strip()
        if not part:
            continue
        if "@" not in part:
            raise UsageError(f"density item {part!r} is not mass@x,y,z")
        m, pos = part.split("@", 1)
        items.append((float(m), _vec(pos)))
    return MassDensityField.point_masses(items)


# ------------------------------------------------------------ commands

def cmd_ftilde(cfg):
    qc = QuadratureConfig(abs_tol=cfg["abs_tol"], rel_tol=cfg["rel_tol"],
                          max_evals=cfg["max_evals"], strategy="stratified_mc",
                          seed=cfg["seed"])
    d = _grid(cfg["d_min"], cfg["d_max"], cfg["d_step"])
    rows, bad = [], []
    for i, di in enumerate(d):
        r = sp.f_tilde(di, qc.replace(seed=cfg["seed"] + i, workers=cfg["workers"]))
        rows.append((float(di), r.value, r.error_estimate))
        if not r.converged:
            bad.append(float(di))
    write_csv(cfg, "ftilde.csv", ["d_tilde", "f_tilde", "std_error"], rows)
    dd = np.array([r[0] for r in rows])
    FF = np.array([r[1] for r in rows])
    fit_rows = []
    sel = (dd >= cfg["fit_lo"] - 1e-12) & (dd <= cfg["fit_hi"] + 1e-12) & (dd > 0)
    if sel.sum() >= 2:
        c, se = sp.fit_quadratic_coefficient(dd[sel], FF[sel])
        fit_rows.append(("quadratic_coefficient", c, se, 4.49))
    tsel = (dd >= cfg["tail_lo"] - 1e-12) & (dd <= cfg["tail_hi"] + 1e-12) & (FF > 0)
    if tsel.sum() >= 3:
        t = sp.fit_exponential_tail(dd[tsel], FF[tsel], d_ref=cfg["tail_lo"])
        fit_rows += [("tail_log_slope", t["slope"], t["slope_se"], -1 / 1.3),
                     ("tail_decay_length", t["decay_length"], float("nan"), 1.3),
                     ("tail_amplitude", t["amplitude"], float("nan"), 2.1)]
    write_csv(cfg, "ftilde_fit.csv", ["quantity", "value", "std_error", "reference"], fit_rows)
    for q, v, e, ref in fit_rows:
        print(f"{q}: {v:.6g} +- {e:.2g} (reference {ref:.4g})")
    p = LinePlot("F~ versus d~", "d~", "F~")
    p.add(dd, FF, "Monte Carlo")
    small = dd[dd <= 1.0]
    p.add(small, 4.49 * small ** 2, "4.49 d~^2", dashed=True)
    big = dd[dd >= 2.0]
    p.add(big, 2.1 * np.exp(-(big - 3.5) / 1.3), "2.1 exp(-(d~-3.5)/1.3)", dashed=True)
    p.save(os.path.join(cfg["out"], "ftilde.svg"))
    if bad:
        raise NotConverged(f"F~ not converged at d~ = {bad}")


def cmd_decoherence(cfg):
    models = [m.strip() for m in cfg["models"].split(",") if m.strip()]
    if not models:
        raise UsageError("need at least one model")
    try:
        models = [sp.Model(m) for m in models]
    except ValueError as e:
        raise UsageError(str(e)) from None
    td = None
    if sp.Model.TD_CSL in models:
        if cfg["gamma_csl"] is None:
            raise UsageError("TD_CSL needs gamma_csl")
        td = TDParams(cfg["gamma_csl"])
    params = model_params(cfg)
    part = ParticleSpec(cfg["mass"])
    d = _grid(cfg["d_min"], cfg["d_max"], cfg["d_step"])
    qc = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-3, max_evals=cfg["max_evals"],
                          strategy="stratified_mc", seed=cfg["seed"])
    plot = LinePlot("Decoherence rate", "d~", "Gamma")
    limits = []
    not_conv = []
    for m in models:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            curve = sp.decoherence_curve(m, d, part, params, td, qc, cfg["workers"])
        rows = [(p.d_tilde, p.rate, p.error, p.collapse_part, p.gravity_part, p.converged)
                for p in curve.points]
        not_conv += [(m.value, p.d_tilde) for p in curve.points if not p.converged]
        write_csv(cfg, f"decoherence_{m.value}.csv",
                  ["d_tilde", "rate", "error", "collapse_part", "gravity_part", "converged"], rows)
        plot.add(curve.d_tilde, curve.rates, m.value)
        far = cfg["plateau_d"]
        if m in (sp.Model.GPSL_exact, sp.Model.GPSL_perturbative):
            num = (sp.gamma_gpsl_perturbative(far, part, params).rate
                   if m is sp.Model.GPSL_perturbative
                   else sp.gamma_gpsl_exact(far, part, params, qc).rate)
            limits.append((m.value, "plateau", far, num, sp.plateau_gpsl(part, params)))
        elif m is sp.Model.TD_DP:
            # the DP bracket approaches 1 only like 1/d~, so take the limit itself
            limits.append((m.value, "plateau", math.inf, sp.gamma_td_dp(math.inf, part, params).rate,
                           sp.dp_prefactor(part, params)))
        else:
            # gravity part grows like prefactor * d~ at large d~
            g1 = sp.gamma_td_csl(far, part, params, td).gravity_part
            g2 = sp.gamma_td_csl(2 * far, part, params, td).gravity_part
            limits.append((m.value, "gravity_tail_slope", far, (g2 - g1) / far,
                           sp.csl_gravity_prefactor(part, params, td)))
    write_csv(cfg, "decoherence_limits.csv",
              ["model", "quantity", "d_tilde", "numeric", "closed_form"], limits)
    plot.save(os.path.join(cfg["out"], "decoherence.svg"))
    if not_conv:
        raise NotConverged(f"{len(not_conv)} points missed tolerance, e.g. {not_conv[0]}")


def cmd_sphere(cfg):
    form = cfg["form"]
    if form not in ("quoted", "integral"):
        raise UsageError("form must be quoted or integral")
    x = _grid(cfg["x_min"], cfg["x_max"], cfg["x_step"])
    # continuity at x = 1 from both branches
    lo, hi = np.nextafter(1.0, 0.0), 1.0
    checks = []
    for name, fn in (("K_C", rs.k_c), ("K_G_GPSL", lambda a: rs.k_g_gpsl(a, form)),
                     ("K_G_DP", lambda a: rs.k_g_dp(a, form)),
                     ("K_G_CSL", lambda a: rs.k_g_csl(a, form)), ("F_Sp", rs.f_sp)):
        jump = abs(fn(lo) - fn(np.nextafter(1.0, 2.0)))
        checks.append((name, fn(hi), jump, jump <= 1e-12))
    write_csv(cfg, "sphere_continuity.csv", ["kernel", "value_at_1", "jump", "ok"], checks)
    if not all(c[3] for c in checks):
        raise GateFailure("branch continuity check failed")
    kc, kg, kd, ks = rs.k_c(x), rs.k_g_gpsl(x, form), rs.k_g_dp(x, form), rs.k_g_csl(x, form)
    write_csv(cfg, "sphere_kernels.csv", ["D_tilde", "K_C", "K_G_GPSL", "K_G_DP", "K_G_CSL"],
              zip(x, kc, kg, kd, ks))
    p = LinePlot("Sphere gravitational kernels", "D~ = |X - Y|/2R", "K_G")
    p.add(x, kg, "GPSL").add(x, kd, "TD-DP").add(x, ks, "TD-CSL")
    p.save(os.path.join(cfg["out"], "sphere.svg"))
    si = ModelParams(cfg["balance_gamma"], 1e-7, PhysicalConstants())
    write_csv(cfg, "sphere_balance.csv", ["mu0", "gamma", "R_order_of_magnitude", "R_exact"],
              [(cfg["balance_mu0"], cfg["balance_gamma"],
                rs.balance_radius(cfg["balance_mu0"], si),
                rs.balance_radius(cfg["balance_mu0"], si, exact=True))])
    if cfg["mode"] == "rates":
        if cfg["mass"] is None or cfg["radius"] is None:
            raise UsageError("mode = rates needs mass and radius")
        params = model_params(cfg)
        sph = rs.SphereSpec(cfg["mass"], cfg["radius"])
        td = TDParams(cfg["gamma_csl"]) if cfg["gamma_csl"] is not None else None
        rows = []
        for xi in x:
            r = [xi, rs.gamma_sphere(sp.Model.GPSL_perturbative, xi, sph, params, form=form).rate,
                 rs.gamma_sphere(sp.Model.TD_DP, xi, sph, params, form=form).rate,
                 rs.gamma_sphere(sp.Model.TD_CSL, xi, sph, params, td, form).rate
                 if td else float("nan")]
            rows.append(r)
        write_csv(cfg, "sphere_rates.csv", ["D_tilde", "GPSL", "TD_DP", "TD_CSL"], rows)
    elif cfg["mode"] != "kernels":
        raise UsageError("mode must be kernels or rates")


def cmd_force(cfg):
    dr = np.geomspace(cfg["dr_min"], cfg["dr_max"], int(cfg["n_points"]))
    res = [fz.f_tilde_g_result(v) for v in dr]
    rows = [(v, r.value, r.error_estimate, fz.SMALL_DR_SLOPE_QUOTED * v, 0.5 / v ** 2)
            for v, r in zip(dr, res)]
    write_csv(cfg, "force.csv",
              ["d_r", "F_tilde_G", "error", "small_d_asymptote", "large_d_asymptote"], rows)
    p = LinePlot("Reduced force", "d_r", "F~_G", logx=True, logy=True)
    p.add(dr, [r[1] for r in rows], "F~_G")
    p.add(dr, [r[3] for r in rows], "4 d_r/(3 pi^2)", dashed=True)
    p.add(dr, [r[4] for r in rows], "1/(2 d_r^2)", dashed=True)
    p.save(os.path.join(cfg["out"], "force.svg"))
    params = model_params(cfg)
    anti = []
    for s in (float(v) for v in str(cfg["pair_separations"]).split(",")):
        pair = fz.PairConfiguration(1.0, 2.0, (0.0, 0.0, 0.0), (s * params.r_C, 0.0, 0.0))
        f1 = fz.average_force(pair, params).components
        f2 = fz.average_force(pair.swapped(), params).components
        mag = float(np.linalg.norm(f1))
        newton = params.constants.G * 2.0 / (s * params.r_C) ** 2
        anti.append((s, mag, float(np.linalg.norm(f1 + f2)), mag / newton))
    write_csv(cfg, "force_antisymmetry.csv",
              ["separation_over_rC", "force", "sum_of_pair", "ratio_to_newton"], anti)
    if any(not r.converged for r in res):
        raise NotConverged("F~_G quadrature missed tolerance")
    if any(a[2] > 1e-12 * a[1] for a in anti):
        raise GateFailure("action-reaction check failed")


def cmd_covariance(cfg):
    params = model_params(cfg)
    dens = _density(cfg["density"])
    qc = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-2, max_evals=cfg["max_evals"],
                          strategy="stratified_mc", seed=cfg["seed"], workers=cfg["workers"])
    rows = covariance_table(_vec(cfg["x"]), _vec(cfg["y"]), dens, params, qc)
    write_csv(cfg, "covariance.csv", ["model", "case", "value", "error", "divergent", "note"],
              [(m, c, r.value, r.error, r.divergent, r.note) for m, c, r in rows])
    if any(m == "GPSL" and r.note == "not converged" for m, _, r in rows):
        raise NotConverged("GPSL covariance missed tolerance")


def cmd_simulate(cfg):
    params = model_params(cfg)
    part = ParticleSpec(cfg["mass"])
    if part.r_p(params) > sp.RP_VALIDITY * params.r_C:
        raise UsageError("analytic comparison needs r_p/r_C <= 0.1")
    tc = tr.TrajectoryConfig(cfg["dt"], cfg["t_final"], cfg["n_trajectories"], cfg["seed"],
                             part, params, cfg["gravity"], cfg["sampler"], cfg["n_times"],
                             cfg["workers"])
    state = tr.LatticeState.two_site(cfg["d_tilde"], params.r_C)
    res = tr.run_ensemble(tc, state)
    rho = res.rho_mean[:, 0, 1]
    se = res.rho_se[:, 0, 1]
    write_csv(cfg, "simulate_rho.csv", ["t", "rho01_re", "rho01_im", "std_error"],
              zip(res.times, rho.real, rho.imag, se))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", tr.FitQualityWarning)
        fit = tr.decay_rate_fit(res)
    if cfg["gravity"]:
        ana = sp.gamma_gpsl_perturbative(cfg["d_tilde"], part, params).rate
    else:
        ana = params.collapse_rate(part.mass) * -math.expm1(-0.5 * cfg["d_tilde"] ** 2)
    z = (fit.rate - ana) / fit.stderr if fit.stderr > 0 else float("inf")
    ok = abs(z) <= cfg["gate_sigma"]
    write_csv(cfg, "simulate_fit.csv",
              ["fitted_rate", "std_error", "analytic_rate", "z_score", "n_points",
               "mean_collapses", "n_aborted", "pass"],
              [(fit.rate, fit.stderr, ana, z, fit.n_points,
                float(np.mean(res.collapse_counts)), res.n_aborted, ok)])
    p = LinePlot("Ensemble coherence", "t", "|rho_01|", logy=True)
    p.add(res.times, np.abs(rho), "trajectories")
    p.add(res.times, abs(rho[0]) * np.exp(-ana * res.times), "master equation", dashed=True)
    p.save(os.path.join(cfg["out"], "simulate.svg"))
    print(f"fitted {fit.rate:.6g} +- {fit.stderr:.2g}, analytic {ana:.6g}, z = {z:.2f}")
    if not ok:
        raise GateFailure(f"fitted rate off by {z:.2f} sigma")


def cmd_check(cfg):
    """Fast oracle gates: identities and null results that must hold."""
    qc = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-2, max_evals=cfg["max_evals"],
                          strategy="stratified_mc", seed=cfg["seed"], workers=cfg["workers"])
    rows = []

    def gate(name, value, expected, err, tol_rel=None, n_sigma=3.0):
        diff = abs(value - expected)
        ok = diff <= n_sigma * err if tol_rel is None else (
            diff <= tol_rel * abs(expected) and diff <= max(n_sigma * err, 1e-15))
        rows.append((name, value, expected, err, ok))

    for D in (0.5, 1.0, 2.0):
        vec = np.array([0.0, 0.0, D])

        def f(z, vec=vec):
            a = np.sqrt(np.sum(z * z, axis=1))
            b = np.sqrt(np.sum((z + vec) ** 2, axis=1))
            return (1.0 / a - 1.0 / b) ** 2

        prop = MixtureProposal([CoulombProposal((0, 0, 0), D), CoulombProposal(-vec, D)], [0.5, 0.5])
        r = integrate_nd_mc(f, prop, qc)
        gate(f"coulomb_identity_D{D:g}", r.value, 4 * math.pi * D, r.error_estimate, 1e-2)
    for d in (0.5, 1.0, 3.0):
        r = sp.self_interaction_null_check(d, qc.replace(seed=cfg["seed"] + 7))
        gate(f"self_interaction_null_d{d:g}", r.value, 0.0, r.error_estimate)
    x1 = 1.0
    gate("K_G_DP_at_1", rs.k_g_dp(x1), rs.DP_PREF * 7 / 5, 0.0, 1e-12)
    gate("K_G_CSL_at_1", rs.k_g_csl(x1), 41 * math.pi / 70, 0.0, 1e-12)
    write_csv(cfg, "check.csv", ["check", "value", "expected", "error", "pass"], rows)
    for r in rows:
        print(f"{'PASS' if r[4] else 'FAIL'} {r[0]}: {r[1]:.6g} vs {r[2]:.6g}")
    if not all(r[4] for r in rows):
        raise GateFailure("oracle gate failed")


COMMANDS = {
    "ftilde": (cmd_ftilde, "F~(d~) curve, fits and plot"),
    "decoherence": (cmd_decoherence, "single-particle decoherence curves"),
    "sphere": (cmd_sphere, "rigid-sphere kernels and balance radius"),
    "force": (cmd_force, "mean gravitational force curve"),
    "covariance": (cmd_covariance, "field covariance table"),
    "simulate": (cmd_simulate, "two-site trajectory ensemble vs master equation"),
    "check": (cmd_check, "fast oracle gates"),
}


def build_parser():
    ap = argparse.ArgumentParser(prog="gpsl", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="flat key = value file")
        keys = dict(COMMON)
        keys.update(DEFAULTS[name])
        for k, v in keys.items():
            p.add_argument(f"--{k}", dest=k, default=None, metavar=type(v).__name__.upper()
                           if v is not None else "VALUE", help=f"default: {v}")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        file_values = parse_config_file(args.config) if args.config else {}
        cfg = resolve(args.command, file_values, flags)
        os.makedirs(cfg["out"], exist_ok=True)
        fn(cfg)
    except (UsageError, sp.ValidityError, ValueError, OSError) as e:
        print(f"gpsl: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NotConverged, IntegrationError) as e:
        print(f"gpsl: not converged: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except GateFailure as e:
        print(f"gpsl: gate failed: {e}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

import csv
import json
import math
import xml.etree.ElementTree as ET

import pytest

from gpsl import cli


def _read(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[1:]))
    return meta, rows[0], rows[1:]


def test_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nseed = 5\nd_max = 2.0  # trailing\ndt = 0.005\n")
    fv = cli.parse_config_file(conf)
    cfg = cli.resolve("simulate", {k: v for k, v in fv.items() if k != "d_max"}, {}, env={})
    assert cfg["seed"] == 5 and cfg["dt"] == 0.005
    cfg = cli.resolve("simulate", {"seed": "5"}, {}, env={"GPSL_SEED": "9"})
    assert cfg["seed"] == 9
    cfg = cli.resolve("simulate", {"seed": "5"}, {"seed": "12"}, env={"GPSL_SEED": "9"})
    assert cfg["seed"] == 12
    assert cli.resolve("simulate", env={})["gravity"] is True
    assert cli.resolve("simulate", {"gravity": "off"}, env={})["gravity"] is False


def test_bad_config(tmp_path):
    with pytest.raises(cli.UsageError):
        cli.resolve("force", {"nonsense": "1"}, env={})
    with pytest.raises(cli.UsageError):
        cli.resolve("force", {}, {"workers": "0"}, env={})
    bad = tmp_path / "bad.conf"
    bad.write_text("just words\n")
    assert cli.main(["force", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_ftilde_default_grid_rows(tmp_path):
    rc = cli.main(["ftilde", "--max_evals", "20000", "--rel_tol", "1", "--abs_tol", "1",
                   "--out", str(tmp_path)])
    assert rc == 0
    meta, header, rows = _read(tmp_path / "ftilde.csv")
    assert header == ["d_tilde", "f_tilde", "std_error"]
    assert len(rows) == 121
    assert float(rows[0][1]) == 0.0 and float(rows[-1][0]) == 6.0
    assert meta["seed"] == 20240601 and "workers" not in meta
    fit = {r[0]: float(r[1]) for r in _read(tmp_path / "ftilde_fit.csv")[2]}
    assert "quadratic_coefficient" in fit and "tail_log_slope" in fit


def test_nonconvergence_exit_code(tmp_path):
    assert cli.main(["ftilde", "--d_max", "0.2", "--max_evals", "2000", "--rel_tol", "1e-9",
                     "--abs_tol", "1e-15", "--out", str(tmp_path)]) == 3


def test_csl_without_gamma_is_usage_error(tmp_path):
    assert cli.main(["decoherence", "--models", "TD_CSL", "--out", str(tmp_path)]) == 2
    assert cli.main(["decoherence", "--models", "Nope", "--out", str(tmp_path)]) == 2


def test_decoherence_limits(tmp_path):
    rc = cli.main(["decoherence", "--models", "GPSL_perturbative,TD_DP,TD_CSL", "--gamma_csl", "2",
                   "--out", str(tmp_path)])
    assert rc == 0
    lim = {r[0]: r for r in _read(tmp_path / "decoherence_limits.csv")[2]}
    for m in ("GPSL_perturbative", "TD_DP"):
        assert float(lim[m][3]) == pytest.approx(float(lim[m][4]), rel=1e-12)
    assert float(lim["TD_CSL"][3]) == pytest.approx(float(lim["TD_CSL"][4]), rel=0.02)


def test_sphere_outputs(tmp_path):
    assert cli.main(["sphere", "--out", str(tmp_path)]) == 0
    _, header, rows = _read(tmp_path / "sphere_kernels.csv")
    gp = header.index("K_G_GPSL")
    assert all(float(r[gp]) == 0.0 for r in rows if float(r[0]) >= 1.0)
    _, _, bal = _read(tmp_path / "sphere_balance.csv")
    assert 1e-5 < float(bal[0][2]) < 1e-3
    assert cli.main(["sphere", "--mode", "rates", "--out", str(tmp_path)]) == 2
    assert cli.main(["sphere", "--mode", "rates", "--mass", "100", "--radius", "5",
                     "--out", str(tmp_path)]) == 2
    assert cli.main(["sphere", "--mode", "rates", "--mass", "100", "--radius", "30", "--G", "1e-3",
                     "--out", str(tmp_path)]) == 0


def test_force_and_covariance(tmp_path):
    assert cli.main(["force", "--out", str(tmp_path)]) == 0
    _, _, anti = _read(tmp_path / "force_antisymmetry.csv")
    assert all(float(r[2]) == 0.0 for r in anti)
    assert float(anti[-1][3]) == pytest.approx(1.0, abs=1e-2)
    assert cli.main(["covariance", "--out", str(tmp_path)]) == 0
    _, _, rows = _read(tmp_path / "covariance.csv")
    flags = {(r[0], r[1]): r[4] for r in rows}
    assert flags["GPSL", "diagonal"] == "0" and flags["TD_DP", "diagonal"] == "1"
    assert flags["TD_CSL", "off_diagonal"] == "1"
    assert all(math.isfinite(float(r[2])) for r in rows if r[0] == "GPSL")


def test_simulate_gate(tmp_path):
    assert cli.main(["simulate", "--n_trajectories", "2000", "--out", str(tmp_path)]) == 0
    assert cli.main(["simulate", "--n_trajectories", "500", "--gate_sigma", "0",
                     "--out", str(tmp_path)]) == 4
    assert cli.main(["simulate", "--G", "0.5", "--out", str(tmp_path)]) == 2


def test_check_command(tmp_path):
    assert cli.main(["check", "--out", str(tmp_path)]) == 0
    _, _, rows = _read(tmp_path / "check.csv")
    assert all(r[-1] == "1" for r in rows)


def test_svgs_are_static_xml(tmp_path):
    cli.main(["sphere", "--out", str(tmp_path)])
    cli.main(["force", "--out", str(tmp_path)])
    for name in ("sphere.svg", "force.svg"):
        text = (tmp_path / name).read_text()
        root = ET.fromstring(text)
        assert root.tag.endswith("svg")
        assert "<script" not in text and "href" not in text

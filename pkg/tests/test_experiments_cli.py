import json
import math
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

from mstlimit import experiments as ex
from mstlimit.cli import EXIT_CHECK, EXIT_OK, EXIT_USAGE, main

SCHEMA = json.loads(resources.files("mstlimit").joinpath("schema/summary.schema.json").read_text())


def test_slope_exact_power_laws():
    r = np.arange(8, 65)
    assert abs(ex.fit_loglog_slope(np.column_stack((r, r**3.0)))[0] - 3) < 1e-12
    s, c, ssr = ex.fit_loglog_slope(np.column_stack((r, 5 * r**2.0)))
    assert abs(s - 2) < 1e-12 and abs(c - math.log(5)) < 1e-10 and ssr < 1e-20


def test_slope_with_log_correction():
    # r^3 exp(sqrt(log r)) has local exponent 3 + 1 / (2 sqrt(log r)), about 3.2 to 3.35 on [8, 64]
    r = np.arange(8, 65, dtype=float)
    s = ex.fit_loglog_slope(np.column_stack((r, r**3 * np.exp(np.sqrt(np.log(r))))))[0]
    assert 3.0 < s < 3.6


@pytest.mark.parametrize("pts", [[(1, 1), (2, 2)], [(1, 1), (2, 0), (3, 4)], [(1, 1), (2, np.inf), (3, 3)]])
def test_slope_errors(pts):
    with pytest.raises(ValueError):
        ex.fit_loglog_slope(pts)


def test_tv_to_pmf_counts_missing_tail():
    assert ex.tv_to_pmf([0, 1], np.array([0.5, 0.5])) == 0
    assert math.isclose(ex.tv_to_pmf([0, 0], np.array([0.5, 0.3])), 0.5 * (0.5 + 0.3 + 0.2))


def test_replicate_streams_are_stable():
    a = ex.replicate_rng(3, 7).random(4)
    assert np.array_equal(a, ex.replicate_rng(3, 7).random(4))
    assert not np.array_equal(a, ex.replicate_rng(3, 8).random(4))
    assert not np.array_equal(a, ex.replicate_rng(3, 7, stream=1).random(4))


def _run(tmp_path, name, *argv):
    prefix = tmp_path / name
    rc = main([*argv, "--out", str(prefix)])
    return rc, prefix.with_suffix(".csv").read_bytes(), json.loads(prefix.with_suffix(".json").read_text())


@pytest.mark.parametrize(
    "argv",
    [
        ["theta-table", "--reps", "20"],
        ["degree-dist", "--mode", "aldous"],
        ["degree-dist", "--mode", "finite-n", "--n", "300", "--reps", "6"],
        ["volume-growth", "--object", "T", "--rmax", "12", "--rmin", "2", "--reps", "5"],
        ["volume-growth", "--object", "Kn-mst", "--n", "500", "--rmax", "6", "--rmin", "1", "--reps", "3"],
        ["convergence", "--n", "200", "400", "--reps", "30"],
        ["identities", "--which", "nk-bracket"],
        ["forward-maximal-ks", "--steps", "500", "--reps", "8"],
        ["zprim-stats", "--n", "2000", "--reps", "12", "--probes", "5"],
        ["hybrid-demo", "--n", "300", "--z", "1.1", "--reps", "4"],
    ],
)
def test_outputs_deterministic_and_valid(tmp_path, argv):
    rc1, csv1, js1 = _run(tmp_path, "a", *argv, "--seed", "5", "--workers", "1")
    rc2, csv2, js2 = _run(tmp_path, "b", *argv, "--seed", "5", "--workers", "2")
    assert rc1 == rc2 == EXIT_OK
    assert csv1 == csv2
    js2["config"]["workers"] = 1
    assert js1 == js2
    jsonschema.validate(js1, SCHEMA)
    lines = csv1.decode().split("\r\n")
    assert lines[-1] == "" and js1["rows"] == len(lines) - 2


def test_seed_changes_output(tmp_path):
    _, a, _ = _run(tmp_path, "a", "forward-maximal-ks", "--steps", "200", "--reps", "4", "--seed", "1")
    _, b, _ = _run(tmp_path, "b", "forward-maximal-ks", "--steps", "200", "--reps", "4", "--seed", "2")
    assert a != b


def test_zeta_identity_command(tmp_path):
    rc, _, js = _run(tmp_path, "z", "identities", "--which", "zeta", "--reps", "20000", "--check")
    assert rc == EXIT_OK
    assert abs(js["stats"]["value"] - ex.ZETA_IDENTITY) < 1e-8
    assert abs(ex.ZETA_IDENTITY - 0.7591797) < 1e-7


def test_exit_codes(capsys):
    assert main(["theta-table", "--reps", "10", "--check"]) == EXIT_OK
    assert main(["nope"]) == EXIT_USAGE
    assert main(["degree-dist", "--mode", "bogus"]) == EXIT_USAGE
    assert main(["hybrid-demo", "--z", "1.5", "--lam", "1.2", "--reps", "1"]) == EXIT_USAGE
    assert main(["theta-table", "--seed", "-1"]) == EXIT_USAGE
    # 50 finite-n draws cannot get the root-degree TV under 0.02
    assert main(["degree-dist", "--mode", "finite-n", "--n", "200", "--reps", "50", "--check"]) == EXIT_CHECK
    assert "checks failed" in capsys.readouterr().err


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(ex.WORKERS_ENV, "3")
    assert ex.ExperimentConfig("theta-table").workers == 3
    monkeypatch.setenv(ex.WORKERS_ENV, "0")
    with pytest.raises(ValueError):
        ex.ExperimentConfig("theta-table")


def test_tree_export(tmp_path):
    from mstlimit.trees import RootedWeightedTree

    path = tmp_path / "tree.txt"
    rc = main(["hybrid-demo", "--n", "400", "--z", "1.05", "--reps", "1", "--tree-out", str(path)])
    if rc == EXIT_USAGE:
        pytest.skip("first instance had g = 0")
    t = RootedWeightedTree.read(path)
    assert t.n >= 1 and t.root == 0


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "mstlimit", "theta-table", "--reps", "5"], capture_output=True, text=True, check=True
    )
    assert json.loads(out.stdout)["command"] == "theta-table"

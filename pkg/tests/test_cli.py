import csv
import os

import pytest

from wignerkin import cli


def _run(tmp_path, command, text="", *extra):
    config = tmp_path / "run.ini"
    config.write_text(text)
    out = tmp_path / "out"
    return cli.main([command, "--config", str(config), "--out", str(out), "--quiet", *extra]), out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fmt_is_round_trip_exact():
    for value in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(cli.fmt(value)) == value
    assert cli.fmt(-0.0) == "0"
    assert cli.fmt(True) == "true" and cli.fmt(7) == "7"


def test_atomic_csv_leaves_no_temporaries(tmp_path):
    path = tmp_path / "t.csv"
    cli.write_csv_atomic(path, ["a", "b"], [{"a": 1.5, "b": "x"}])
    assert path.read_text() == "a,b\n1.5,x\n"
    assert os.listdir(tmp_path) == ["t.csv"]


def test_simulate_writes_exact_columns(tmp_path):
    code, out = _run(tmp_path, "simulate", "[grid]\nN = 7\n[solver]\nT = 0.01\n")
    assert code == 0
    with open(out / "trajectory.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header == [c for c in cli.SIMULATE_COLUMNS if c != "momentum_z"]
    rows = _rows(out / "trajectory.csv")
    assert len(rows) == 3 and float(rows[-1]["time"]) == pytest.approx(0.01)
    assert (out / "simulate.resolved.ini").exists()


def test_resolved_config_records_seed(tmp_path):
    code, out = _run(tmp_path, "simulate",
                     "[grid]\nN = 7\n[solver]\nT = 0.005\n[initial]\ngenerator = random-seeded\n",
                     "--seed", "11")
    assert code == 0
    assert "seed = 11" in (out / "simulate.resolved.ini").read_text()


def test_roundtrip_checks_pass(tmp_path):
    code, out = _run(tmp_path, "roundtrip")
    assert code == 0
    rows = _rows(out / "roundtrip.csv")
    assert {r["name"] for r in rows} == {"isometry", "inverse", "intertwining"}
    assert all(r["pass"] == "true" for r in rows)


@pytest.mark.parametrize("text", [
    "[grid]\nN = nine\n",
    "[grid]\nN = 8\n",
    "[mystery]\nkey = 1\n",
    "[initial]\ngenerator = unknown\n",
    "[kernel]\nvariant = tabulated\n",
    "not an ini file",
])
def test_configuration_errors_exit_2(tmp_path, text):
    code, _ = _run(tmp_path, "simulate", text)
    assert code == cli.EXIT_CONFIG


def test_missing_config_file_exits_2(tmp_path):
    assert cli.main(["simulate", "--config", str(tmp_path / "nope.ini")]) == cli.EXIT_CONFIG


def test_non_convergence_exits_3(tmp_path):
    code, out = _run(tmp_path, "simulate", "[grid]\nN = 7\n[solver]\nT = 0.01\nmax_iter = 1\n")
    assert code == cli.EXIT_NONCONVERGENCE
    assert not (out / "trajectory.csv").exists()


def test_non_finite_data_exits_4(tmp_path):
    code, _ = _run(tmp_path, "simulate", "[grid]\nN = 7\n[solver]\nT = 0.01\n[initial]\namplitude = nan\n")
    assert code == cli.EXIT_NONFINITE


def test_sweep_writes_probe_rows(tmp_path):
    code, out = _run(tmp_path, "sweep", "[sweep]\ntarget = IdyadicPrime\nbeta = 0.6\ndelta = 0.05\nW = 2, 20\n")
    assert code == 0
    rows = _rows(out / "sweep.csv")
    assert [r["classification"] for r in rows] == ["divergent", "divergent"]


def test_unknown_sweep_target_exits_2(tmp_path):
    code, _ = _run(tmp_path, "sweep", "[sweep]\ntarget = nothing\n")
    assert code == cli.EXIT_CONFIG


def test_threads_environment_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("WIGNERKIN_THREADS", "2")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        monkeypatch.delenv(var, raising=False)
    code, _ = _run(tmp_path, "roundtrip")
    assert code == 0 and os.environ["OMP_NUM_THREADS"] == "2"
    monkeypatch.setenv("WIGNERKIN_THREADS", "many")
    assert _run(tmp_path, "roundtrip")[0] == cli.EXIT_CONFIG


def test_failed_check_exits_1(tmp_path):
    # interpolated gain identities are under-resolved on a 9-point grid
    code, out = _run(tmp_path, "verify-identities", "[identities]\nN = 9\n")
    assert code == cli.EXIT_CHECK
    failed = {r["name"] for r in _rows(out / "identities.csv") if r["pass"] == "false"}
    assert "separation_gain" in failed and "plus_weight_loss" not in failed

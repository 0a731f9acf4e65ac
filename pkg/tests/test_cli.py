from __future__ import annotations

import json

import pytest

from fbannuli.cli import _join_q, load_config, main, pool_size, UsageError
from fbannuli.io import dumps17, write_csv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_period_command(capsys):
    code, out, _ = run(capsys, "period", "--a", "1", "--b", "1", "--kappa", "0")
    assert code == 0
    rep = json.loads(out)
    assert rep["theta"] == pytest.approx(-0.7071068, abs=1e-7)
    assert rep["closed_form_gap"] < 1e-8


def test_tau_command(capsys, tmp_path):
    code, out, _ = run(capsys, "tau", "--a", "1.2", "--b", "1.1", "--kappa", "0.05", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads(out)
    assert {"tau", "roots", "M", "N", "u1"} <= set(rep)
    man = json.loads((tmp_path / "tau.json").read_text())["manifest"]
    assert man["version"] and man["tolerances"]["thresholds"]["closure"] == 1e-6


def test_usage_errors(capsys):
    assert run(capsys, "period", "--a", "0.5")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "period", "--tol", "-1")[0] == 2
    assert run(capsys, "annulus", "--q", "1/2")[0] == 2
    assert run(capsys, "annulus")[0] == 2


def test_numerical_failure_exit(capsys):
    code, _, err = run(capsys, "tau", "--a", "1", "--b", "2", "--kappa", "0")
    assert code == 1 and "numerical failure" in err


def test_q_outside_J(capsys):
    code, _, err = run(capsys, "kappa-star", "--q", "-2/3", "--mu-step", "0.02")
    assert code == 1
    assert "q outside computed 𝒥" in err


def test_join_q():
    assert _join_q(["annulus", "--q", "-3/5"]) == ["annulus", "--q=-3/5"]


def test_config_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"a": 1.0, "b": 2.0, "kappa": 0.0}))
    code, out, _ = run(capsys, "period", "--config", str(cfg), "--b", "1")
    assert code == 0 and json.loads(out)["theta"] == pytest.approx(-0.7071068, abs=1e-7)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    with pytest.raises(UsageError):
        load_config(bad)
    assert run(capsys, "period", "--config", str(bad))[0] == 2


def test_solve_and_immerse_files(tmp_path, capsys):
    assert run(capsys, "solve", "--a", "1.2", "--b", "1.3", "--kappa", "-0.1", "--grid-u", "21",
               "--grid-v", "16", "--out", str(tmp_path))[0] == 0
    assert (tmp_path / "omega_field.bin").exists() and (tmp_path / "alphabeta.csv").exists()
    assert run(capsys, "immerse", "--a", "1.2", "--b", "1.3", "--kappa", "-0.1", "--grid-u", "11",
               "--grid-v", "16", "--out", str(tmp_path))[0] == 0
    rep = json.loads((tmp_path / "immerse.json").read_text())["report"]
    assert rep["u_line"]["orthonormality"] < 1e-7


def test_catenoid_table(capsys):
    code, out, _ = run(capsys, "catenoid-table", "--kappa-min", "-0.1", "--kappa-max", "0.1", "--steps", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("kappa,s_tilde,u_tilde") and len(lines) == 4


def test_pool_size(monkeypatch):
    monkeypatch.setenv("FBMA_THREADS", "1")
    assert pool_size() == 1
    monkeypatch.setenv("FBMA_THREADS", "x")
    with pytest.raises(UsageError):
        pool_size()


def _sweep(tmp_path, capsys, name, threads, monkeypatch):
    monkeypatch.setenv("FBMA_THREADS", threads)
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"a_range": [1.0, 1.3], "b_range": [1.0, 2.0], "kappa_range": [-0.1, 0.1],
                               "n_a": 2, "n_b": 3, "n_kappa": 3}))
    d = tmp_path / name
    assert run(capsys, "sweep", "--config", str(cfg), "--out", str(d))[0] == 0
    return d


def test_sweep_deterministic_and_isolated(tmp_path, capsys, monkeypatch):
    d1 = _sweep(tmp_path, capsys, "s1", "1", monkeypatch)
    d2 = _sweep(tmp_path, capsys, "s2", "2", monkeypatch)
    for f in ("sweep.jsonl", "sweep.csv"):
        assert (d1 / f).read_bytes() == (d2 / f).read_bytes()
    rows = [json.loads(l) for l in (d1 / "sweep.jsonl").read_text().splitlines()]
    assert len(rows) == 18
    assert all("M" in r for r in rows if r["kappa"] > 0 and "error" not in r)
    # b = 2, a = 1 has beta'(0) = 0: tau fails, the row is still present
    assert any("tau_failure" in r for r in rows)


def test_io_formatting(tmp_path):
    assert dumps17({"x": 2.0, "y": float("nan")}) == '{\n  "x": 2.0,\n  "y": "nan"\n}\n'
    assert dumps17([0.1]) == "[0.10000000000000001]\n"
    write_csv(tmp_path / "t.csv", ["a", "b"], [(1.0, None)])
    assert (tmp_path / "t.csv").read_bytes() == b"a,b\n1,\n"


@pytest.mark.slow
def test_sweep_full_grid(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FBMA_THREADS", "4")
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"a_range": [1.0, 1.5], "b_range": [1.0, 2.5], "kappa_range": [-0.2, 0.2],
                               "n_a": 10, "n_b": 10, "n_kappa": 10}))
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["rows"] == 1000
    assert len((tmp_path / "sweep.jsonl").read_text().splitlines()) == 1000

import json

import pytest

from twodelay.cli import OUT_ENV, main


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out-dir", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "run.json").read_text())


def test_starting_point(tmp_path, capsys):
    code, out = run(tmp_path, "sp", "starting-point", "--R", "0.2")
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["A0"] == pytest.approx(-6.0)
    m = manifest(out)
    assert m["command"] == "starting-point" and m["exit_code"] == 0
    assert m["params"]["R"] == 0.2 and "wall_clock_seconds" in m


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "a", "region", "--A", "-10", "--R", "0.2")[0] == 3
    assert "EmptyRegion" in capsys.readouterr().err
    assert run(tmp_path, "b", "roots", "--A", "1", "--B", "1", "--C", "1", "--R", "1.5")[0] == 2
    assert run(tmp_path, "c", "spur", "--j", "3", "--R", "0.249", "--no-fraction")[0] == 3
    assert main(["curves", "--R", "0.3"]) == 2  # missing --A


def test_roots_sorted(tmp_path, capsys):
    code, out = run(tmp_path, "r", "roots", "--A", "100", "--B", "35", "--C", "-100", "--R", "0.318")
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    res = [r["re"] for r in data["roots"]]
    assert res == sorted(res, reverse=True) and data["total_unstable"] == 6
    assert (out / "roots.csv").read_text().startswith("re,im,residual\n")


def test_curves_deterministic(tmp_path):
    args = ("curves", "--A", "30", "--R", "0.25", "--jmax", "12")
    c1, o1 = run(tmp_path, "one", *args)
    c2, o2 = run(tmp_path, "two", *args)
    assert c1 == c2 == 0
    for name in ("curves.csv", "curves.svg"):
        assert (o1 / name).read_bytes() == (o2 / name).read_bytes()
    svg = (o1 / "curves.svg").read_text()
    assert "<dc:date>" not in svg


def test_curves_jmax_zero(tmp_path):
    code, out = run(tmp_path, "z", "curves", "--A", "10", "--R", "0.3", "--jmax", "0")
    assert code == 0 and (out / "curves.svg").exists()


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("R: 0.25\n")
    code, _ = run(tmp_path, "c1", "starting-point", "--config", str(cfg))
    assert code == 0 and json.loads(capsys.readouterr().out)["A0"] == pytest.approx(-5.0)
    code, _ = run(tmp_path, "c2", "starting-point", "--config", str(cfg), "--R", "0.2")
    assert json.loads(capsys.readouterr().out)["A0"] == pytest.approx(-6.0)
    bad = tmp_path / "bad.json"
    bad.write_text('{"nonsense": 1}')
    assert run(tmp_path, "c3", "starting-point", "--config", str(bad))[0] == 2


def test_manifest_replay(tmp_path):
    code, o1 = run(tmp_path, "m1", "simulate", "--model", "linear", "--R", "0.48", "--t-end", "2")
    assert code == 0
    code, o2 = run(tmp_path, "m2", "simulate", "--config", str(o1 / "run.json"))
    assert code == 0
    assert (o1 / "trajectory.csv").read_bytes() == (o2 / "trajectory.csv").read_bytes()


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert main(["transition", "--j", "3", "--R", "0.249"]) == 0
    assert (tmp_path / "env" / "run.json").exists()


def test_threads_do_not_change_output(tmp_path):
    args = ("atlas", "--R-lo", "0.2", "--R-hi", "0.26", "--steps", "3", "--A-max", "40", "--no-ladder")
    _, o1 = run(tmp_path, "t1", *args, "--threads", "1")
    _, o2 = run(tmp_path, "t2", *args, "--threads", "2")
    assert (o1 / "atlas.json").read_bytes() == (o2 / "atlas.json").read_bytes()


def test_area_and_asymptotic(tmp_path, capsys):
    code, _ = run(tmp_path, "ar", "area", "--A", "5", "--R", "0.3")
    assert code == 0 and json.loads(capsys.readouterr().out)["area_ratio"] >= 1
    code, _ = run(tmp_path, "as", "asymptotic", "--n", "3")
    assert code == 0
    assert json.loads(capsys.readouterr().out)["area_ratio"] == pytest.approx(1.4431, abs=1e-3)


def test_region_and_events(tmp_path, capsys):
    code, out = run(tmp_path, "rg", "region", "--A", "5", "--R", "0.3", "--resolution", "80")
    assert code == 0
    for name in ("boundary.csv", "region.csv", "region.svg", "region.json"):
        assert (out / name).exists()
    capsys.readouterr()
    code, out = run(tmp_path, "ev", "events", "--R", "0.25", "--A-max", "20")
    assert code == 0
    assert "transferral" in (out / "events.csv").read_text()


def test_simulate_platelet(tmp_path, capsys):
    code, out = run(tmp_path, "pl", "simulate", "--model", "platelet", "--R", "0.5", "--t-end", "10")
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["final"] == pytest.approx(data["equilibrium"], abs=0.01)
    assert (out / "summary.json").exists() and (out / "trajectory.svg").exists()

import math

import numpy as np
import pytest

from twodelay import errors as E
from twodelay.chareq import DdeParams, rightmost_roots
from twodelay.ddesim import (
    HistorySpec,
    PlateletParams,
    Trajectory,
    integrate_linear,
    integrate_platelet,
    linearize_platelet,
    measure_oscillation,
    platelet_equilibrium,
    snap_step,
    write_trajectory_csv,
)

PP = PlateletParams()


def test_equilibrium_value():
    assert platelet_equilibrium(PP) == pytest.approx(959 ** 0.25, rel=1e-12)
    P = platelet_equilibrium(PP)
    rhs = -PP.gamma * P + PP.beta(P) - PP.f * PP.beta(P)
    assert abs(rhs) < 1e-10


def test_no_equilibrium():
    with pytest.raises(E.NoPositiveEquilibrium):
        platelet_equilibrium(PlateletParams(f=0.99))


def test_zero_is_equilibrium():
    tr = integrate_platelet(PP, HistorySpec("constant", 0.0), t_end=1.0)
    assert np.all(tr.values == 0.0)


def test_linearization():
    p = linearize_platelet(PP)
    assert (p.A, p.B, p.C) == pytest.approx((100, 35, -100), rel=1e-3)
    P = platelet_equilibrium(PP)
    h = 1e-5
    fd = (PP.beta(P + h) - PP.beta(P - h)) / (2 * h)
    assert PP.beta_prime(P) == pytest.approx(fd, rel=1e-6)
    assert linearize_platelet(PlateletParams(f=0.0)).B == 0.0


def test_param_validation():
    with pytest.raises(E.InvalidParameters):
        PlateletParams(gamma=-1)
    with pytest.raises(E.InvalidParameters):
        PlateletParams(R=1.0)
    with pytest.raises(E.InvalidParameters):
        HistorySpec("ramp")


def test_step_checks():
    assert snap_step(1 / 2000, 1 / 3) == pytest.approx(1 / 2001)
    assert 1 / snap_step(0.003, 0.3) % 10 == pytest.approx(0)
    with pytest.raises(E.StepTooLarge):
        integrate_linear(DdeParams(1, 1, 1, 0.1), HistorySpec("constant", 1.0), 1.0, h=0.05)


def test_zero_dynamics():
    tr = integrate_linear(DdeParams(0, 0, 0, 0.5), HistorySpec("constant", 2.5), 3.0, h=0.01)
    assert np.all(tr.values == 2.5)
    assert tr.times[0] == 0 and np.allclose(np.diff(tr.times), tr.h)


def test_mrs_run_decays():
    tr = integrate_linear(DdeParams(3, 1, 1, 0.3), HistorySpec("constant", 1.0), 20.0, h=0.01)
    assert abs(tr.values[-1]) < 1e-3 * abs(tr.values[0])


def test_order_of_convergence():
    p = DdeParams(3, 1, -2.5, 0.3)
    hist = HistorySpec("constant", 1.0)
    ys = [integrate_linear(p, hist, 5.0, h).values[-1] for h in (1 / 40, 1 / 80, 1 / 160)]
    ratio = (ys[0] - ys[1]) / (ys[1] - ys[2])
    assert 12 <= ratio <= 20


def test_overflow():
    with pytest.raises(E.Overflow):
        integrate_linear(DdeParams(-50, 0, 0, 0.5), HistorySpec("constant", 1.0), 1.0, h=0.01)


@pytest.mark.parametrize("R,period", [(0.48, 2 * math.pi / 64.71), (0.51, 0.1047)])
def test_linear_periods(R, period):
    tr = integrate_linear(DdeParams(100, 35, -100, R), HistorySpec("equilibrium_plus_pulse", 0, 1e-3), 60.0)
    osc = measure_oscillation(tr)
    assert osc.period == pytest.approx(period, rel=0.01)


def test_spectral_consistency():
    p = DdeParams(100, 35, -100, 0.318)
    lead = rightmost_roots(p, k=1)[0]
    tr = integrate_linear(p, HistorySpec("equilibrium_plus_pulse", 0, 1e-3), 80.0)
    osc = measure_oscillation(tr)
    assert osc.growth_rate == pytest.approx(lead.re, rel=0.1)
    assert osc.period == pytest.approx(2 * math.pi / lead.im, rel=0.05)


def test_not_oscillatory():
    t = np.linspace(0, 5, 501)
    with pytest.raises(E.NotOscillatory):
        measure_oscillation(Trajectory(t, np.exp(-t), 0.01))


def test_linearization_consistency():
    pp = PlateletParams(R=0.4)
    P = platelet_equilibrium(pp)
    d = 1e-6
    nl = integrate_platelet(pp, HistorySpec("equilibrium_plus_pulse", P, d), t_end=1.0, h=1e-3)
    li = integrate_linear(linearize_platelet(pp), HistorySpec("equilibrium_plus_pulse", 0.0, d), 1.0, h=1e-3)
    dev = nl.values - P
    assert np.max(np.abs(dev - li.values)) < 0.01 * np.max(np.abs(li.values))


def test_platelet_negative_history_rejected():
    with pytest.raises(E.InvalidParameters):
        integrate_platelet(PP, HistorySpec("constant", -1.0), t_end=1.0)


def test_trajectory_csv(tmp_path):
    tr = integrate_linear(DdeParams(1, 0, 0, 0.5), HistorySpec("constant", 1.0), 0.1, h=0.01)
    write_trajectory_csv(tmp_path / "t.csv", tr)
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert rows[0] == "t,value" and len(rows) == len(tr.times) + 1

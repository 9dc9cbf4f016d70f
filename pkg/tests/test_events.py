import math

import pytest

from twodelay import errors as E
from twodelay.chareq import DdeParams, eval_char
from twodelay.events import (
    EventRecord,
    atlas_sweep,
    event_ladder,
    find_spur,
    find_tangency,
    find_transferral,
    relevant_transitions,
    write_events_csv,
)


def witness_residual(ev: EventRecord) -> float:
    """Largest scaled |f(i omega)| over the witness frequencies (omega = 0 is the real root)."""
    wi, wj, B, C = ev.witness
    p = DdeParams(ev.A_value, B, C, ev.R)
    return max(abs(eval_char(1j * w, p)) / p.scale for w in (wi, wj))


def test_spur_one_at_R_02():
    s = find_spur(1, 0.2, with_fraction=False)
    assert s.A_join == pytest.approx(-3.927, abs=0.01)
    assert s.length == pytest.approx(0.4064, abs=0.005)
    assert s.A_cusp < s.A_join and s.length > 0


def test_spur_one_at_R_0249_interval():
    s = find_spur(1, 0.249, with_fraction=False)
    assert s.A_cusp == pytest.approx(-2.7326, abs=1e-3)
    assert s.A_join == pytest.approx(-2.4464, abs=1e-3)


def test_spur_three_at_R_02():
    s = find_spur(3, 0.2, with_fraction=False)
    assert s.A_join == pytest.approx(11.78, abs=0.02)
    assert s.length == pytest.approx(0.0110, abs=0.002)
    # the island appears where Gamma_4 cusps, a little after the fold
    assert s.A_cusp < s.A_island < s.A_join


def test_spur_fraction_R_025():
    s = find_spur(1, 0.25)
    assert 0 <= s.cross_section_fraction < 1
    assert s.cross_section_fraction == pytest.approx(0.0708, abs=0.005)


def test_spur_errors():
    with pytest.raises(E.InfiniteTransition):
        find_spur(1, 0.5)
    with pytest.raises(E.NoCusp):
        find_spur(3, 0.249, with_fraction=False)


def test_transferral_examples():
    ev = find_transferral(1, 6, 0.249, (10, 20))
    assert ev.kind == "transferral" and (ev.i, ev.j) == (1, 6)
    assert ev.A_value == pytest.approx(13.3, abs=0.3)
    assert witness_residual(ev) < 1e-8
    ev = find_transferral(1, 7, 0.2, (15, 30))
    assert ev.A_value == pytest.approx(21, abs=1)
    ev = find_transferral(6, 1, 0.249, (745, 749.9))
    assert ev.kind == "reverse_transferral" and (ev.i, ev.j) == (6, 1)
    assert ev.A_value == pytest.approx(749.4, abs=0.1)
    B, C = ev.witness[2:]
    assert B + C + ev.A_value == pytest.approx(0, abs=1e-8 * ev.A_value)


def test_tangency_examples():
    ev = find_tangency(3, 9, 0.249, (45, 55))
    assert ev.kind == "tangency" and (ev.i, ev.j) == (3, 9)
    assert ev.A_value == pytest.approx(49.4, abs=0.05)
    assert witness_residual(ev) < 1e-8
    ev = find_tangency(6, 12, 0.249, (75, 85))
    assert ev.A_value == pytest.approx(80.216, abs=1e-3)
    ev = find_tangency(9, 3, 0.249, (745, 749))
    assert ev.kind == "reverse_tangency" and (ev.i, ev.j) == (9, 3)
    assert ev.A_value == pytest.approx(747.134, abs=1e-3)
    assert witness_residual(ev) < 1e-8


def test_tangency_no_bracket():
    with pytest.raises(E.NoBracket):
        find_tangency(3, 9, 0.249, (10, 20))
    with pytest.raises(E.InvalidParameters):
        find_tangency(3, 3, 0.249, (10, 20))


def test_relevant_transitions_R_0249():
    assert sorted(relevant_transitions(0.249, 750)) == [1, 2, 3]


def test_ladder_R_025():
    ev = event_ladder(0.25, 50)
    kinds = [(e.kind, e.i, e.j) for e in ev]
    assert kinds[0] == ("start", 0, 0)
    assert ("transferral", 1, 6) in kinds
    t39 = [e for e in ev if (e.kind, e.i, e.j) == ("tangency", 3, 9)]
    assert t39 and t39[0].A_value == pytest.approx(49, abs=0.5)
    assert [e.A_value for e in ev] == sorted(e.A_value for e in ev)
    assert all(e.refined for e in ev)
    starts = {e.i: e.A_value for e in ev if e.kind == "spur_start"}
    joins = {e.i: e.A_value for e in ev if e.kind == "spur_join"}
    assert all(starts[j] < joins[j] for j in starts)


def test_ladder_R_02():
    ev = event_ladder(0.2, 100)
    kinds = {(e.kind, e.i, e.j): e.A_value for e in ev}
    assert {1, 2, 3} <= {e.i for e in ev if e.kind == "spur_join"}
    assert kinds[("transferral", 1, 7)] == pytest.approx(21, abs=1)
    # the curve that cuts Gamma_4 near A = 70 carries index 12 once the
    # pole between Gamma_11 and Gamma_12 has closed at A*_11 = 43.2
    assert kinds[("tangency", 4, 12)] == pytest.approx(70, abs=1.5)


def test_ladder_rejects_low_A_max():
    with pytest.raises(E.InvalidParameters):
        event_ladder(0.2, -7)


def test_atlas_and_csv(tmp_path):
    atlas = atlas_sweep(0.2, 0.26, 4, 50, ladder=False)
    assert len(atlas) == 4
    for R, col in atlas.items():
        assert col["A0"] == pytest.approx(-(R + 1) / R)
        assert all(math.isfinite(a) for a in col["transitions"].values())
    with pytest.raises(E.InvalidParameters):
        atlas_sweep(0.3, 0.2, 3, 10)
    ev = [find_tangency(3, 9, 0.249, (45, 55))]
    write_events_csv(tmp_path / "e.csv", ev)
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "R,kind,i,j,A,B_witness,C_witness"
    assert lines[1].startswith("0.249,tangency,3,9,49.4")

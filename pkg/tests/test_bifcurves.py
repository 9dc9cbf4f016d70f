import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twodelay import errors as E
from twodelay.bifcurves import (
    bif_point,
    curve_arrays,
    curve_coefficients,
    curve_coefficients_d2,
    curve_domain,
    curve_index,
    degeneracy_line,
    family_structure,
    gamma1_limit,
    sample_curve,
    sample_curve_runs,
    starting_point,
    transition_A,
    transition_point,
    transition_point_alternate,
    transition_point_direct,
)
from twodelay.chareq import DdeParams, eval_char


def char_residual(omega, A, B, C, R):
    return abs(eval_char(1j * omega, DdeParams(A, B, C, R))) / (1 + abs(A) + abs(B) + abs(C))


def test_domain_and_index():
    lo, hi = curve_domain(3, 0.25)
    assert lo == pytest.approx(2 * math.pi / 0.75) and hi == pytest.approx(3 * math.pi / 0.75)
    assert curve_index(0.5 * (lo + hi), 0.25) == 3
    with pytest.raises(E.InvalidParameters):
        curve_domain(0, 0.25)


def test_bif_point_satisfies_characteristic_equation():
    pt = bif_point(7.3, 12.0, 0.3)
    assert char_residual(pt.omega, 12.0, pt.B, pt.C, 0.3) < 1e-13


def test_bif_point_singular_and_limit():
    with pytest.raises(E.SingularOmega):
        bif_point(math.pi / 0.7, 1.0, 0.3)
    pt = bif_point(0.0, 2.0, 0.25)
    assert (pt.B, pt.C) == pytest.approx(gamma1_limit(2.0, 0.25))
    # limit is the omega -> 0 value of the parametrization
    B, C, _, _ = curve_arrays(1e-7, 2.0, 0.25)
    assert (B, C) == pytest.approx((pt.B, pt.C), rel=1e-6)
    # and it lies on Lambda_0
    assert sum(gamma1_limit(2.0, 0.25)) + 2.0 == pytest.approx(0.0, abs=1e-12)


def test_derivatives_against_finite_differences():
    w, R, A = 4.1, 0.37, 3.0
    h = 1e-6
    B1, C1, dB, dC = curve_arrays(w, A, R)
    Bp, Cp, _, _ = curve_arrays(w + h, A, R)
    Bm, Cm, _, _ = curve_arrays(w - h, A, R)
    assert dB == pytest.approx((Bp - Bm) / (2 * h), rel=1e-7)
    assert dC == pytest.approx((Cp - Cm) / (2 * h), rel=1e-7)
    d2 = curve_coefficients_d2(w, R)
    c_p, c_m = curve_coefficients(w + h, R), curve_coefficients(w - h, R)
    for k in range(4):
        assert d2[k] == pytest.approx((c_p[4 + k] - c_m[4 + k]) / (2 * h), rel=1e-6)


def test_sample_curve_large_case():
    pts = sample_curve(1, 1000.0, 0.45, bbox=3000.0)
    assert len(pts) > 100
    assert max(char_residual(p.omega, 1000.0, p.B, p.C, 0.45) for p in pts) < 1e-9
    lo, hi = curve_domain(1, 0.45)
    assert all(lo <= p.omega < hi for p in pts)


def test_sample_curve_empty():
    with pytest.raises(E.EmptyCurve):
        sample_curve(40, 1.0, 0.3, bbox=5.0)


def test_runs_have_outside_endpoints():
    runs = sample_curve_runs(2, 5.0, 0.3, bbox=20.0)
    assert runs
    for w, B, C, dB, dC in runs:
        assert np.all(np.diff(w) > 0)


@pytest.mark.parametrize(
    "j,R,want,tol",
    [(1, 0.25, -2.418, 1e-3), (2, 0.25, 4.837, 1e-3), (3, 0.2, 11.78, 1e-2), (3, 0.249, 749.93, 0.1)],
)
def test_transition_values(j, R, want, tol):
    assert abs(transition_A(j, R) - want) <= tol


def test_transition_infinite_and_degenerate():
    assert transition_A(1, 0.5) == math.inf
    with pytest.raises(E.InfiniteTransition):
        transition_point(1, 0.5)
    # cos(theta) = 0: the A*-based form is 0/0, the cosecant form is used
    t = transition_point(1, 1 / 3)
    assert abs(t.A_star) < 1e-12
    assert (t.B_star, t.C_star) == pytest.approx(transition_point_direct(1, 1 / 3))


@pytest.mark.parametrize("j,R", [(1, 0.2), (2, 0.25), (3, 0.249), (6, 0.249), (5, 0.31)])
def test_transition_forms_agree_and_lie_on_both_curves(j, R):
    t = transition_point(j, R)
    d = transition_point_direct(j, R)
    a = transition_point_alternate(j, R)
    assert d == pytest.approx(a, rel=1e-9)
    # independent oracle: Gamma_j and Gamma_{j+1} both approach (B*, C*) at the pole
    w0 = j * math.pi / (1 - R)
    for s in (-1, 1):
        B, C, _, _ = curve_arrays(w0 + s * 1e-7, t.A_star, R)
        assert (B, C) == pytest.approx((t.B_star, t.C_star), rel=1e-5, abs=1e-5)
    # and i*w0 is a root there
    assert char_residual(w0, t.A_star, t.B_star, t.C_star, R) < 1e-12


def test_degeneracy_line():
    d = degeneracy_line(3, 0.249)
    assert d.parity == -1 and d.direction == (1.0, 1.0)
    assert d.residual(d.B_star + 3.0, d.C_star + 3.0) == pytest.approx(0.0, abs=1e-9)
    assert d.residual(d.B_star, d.C_star) == pytest.approx(0.0, abs=1e-12)


def test_starting_point_values():
    sp = starting_point(0.2)
    assert (sp.A0, sp.B0, sp.C0) == pytest.approx((-6, -0.25, 6.25), abs=1e-12)
    sp = starting_point(0.249)
    assert (sp.A0, sp.B0, sp.C0) == pytest.approx((-5.016, -0.3316, 5.348), abs=1e-3)


def test_starting_point_is_gamma1_endpoint():
    # derived oracle: at A0 the Gamma_1 end on Lambda_0 is the starting point
    for R in (0.1, 0.3, 0.6):
        sp = starting_point(R)
        assert gamma1_limit(sp.A0, R) == pytest.approx((sp.B0, sp.C0), rel=1e-12)


def test_starting_point_small_R_warns():
    with pytest.warns(UserWarning):
        starting_point(0.01)


def test_family_structure():
    fs = family_structure(1, 4)
    assert fs.num_families == 6 and fs.j_gap == 3
    assert [fs.classify(i) for i in (1, 6, 7, 13)] == [1, 6, 1, 1]
    with pytest.raises(E.NotCoprime):
        family_structure(2, 4)
    with pytest.raises(E.InvalidParameters):
        family_structure(4, 4)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 60.0), st.floats(-50, 50))
def test_shift_law(omega, A):
    fs = family_structure(1, 4)
    R = 0.25
    s = math.sin(omega * (1 - R))
    if abs(s) < 1e-3:
        return
    B0, C0, _, _ = curve_arrays(omega, A, R)
    B1, C1, _, _ = curve_arrays(omega + 8 * math.pi, A, R)
    scale = 1 + abs(B1) + abs(C1)
    assert abs((B1 - B0) - fs.shift_B(omega)) <= 1e-9 * scale
    assert abs((C1 - C0) - fs.shift_C(omega)) <= 1e-9 * scale


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 40), st.floats(0.01, 0.99), st.floats(0.02, 0.98), st.floats(-100, 1000))
def test_curve_residual_property(j, u, R, A):
    lo, hi = curve_domain(j, R)
    w = lo + (hi - lo) * u
    B, C, _, _ = curve_arrays(w, A, R)
    assert char_residual(w, A, B, C, R) <= 1e-9

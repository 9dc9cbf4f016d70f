import math

import numpy as np
import pytest
import shapely
from hypothesis import given, settings, strategies as st

from twodelay import errors as E
from twodelay.bifcurves import starting_point, transition_A
from twodelay.chareq import DdeParams, count_unstable, stability
from twodelay.region import (
    area_ratio,
    asymptotic_region,
    curve_bound,
    find_stable_seed,
    lambda0_gamma1_junction,
    mrs,
    stable_region_boundary,
    stable_region_raster,
    write_boundary_csv,
    write_region_csv,
)


def test_mrs_diamond():
    d = mrs(2.0)
    assert d.area == 8.0
    assert d.contains(0.5, -1.0) and not d.contains(1.5, 1.0)
    with pytest.raises(E.NonpositiveA):
        mrs(0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 50), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.02, 0.98))
def test_diamond_points_are_stable(A, u, v, R):
    # map the unit square onto the open diamond
    s = 0.999 * A
    B, C = s * (u + v) / 2, s * (u - v) / 2
    assert mrs(A).contains(B, C)
    assert count_unstable(DdeParams(A, B, C, R)).total_unstable == 0


def test_curve_bound_is_rigorous():
    # on Gamma_j, omega = B sin(omega) + C sin(omega R) <= |B| + |C|
    M, R = 40.0, 0.3
    J = curve_bound(M, R)
    assert (J - 1) * math.pi / (1 - R) >= M


def test_empty_region_below_starting_point():
    with pytest.raises(E.EmptyRegion):
        stable_region_boundary(-10.0, 0.2)
    with pytest.raises(E.EmptyRegion):
        find_stable_seed(-6.5, 0.2)


def test_seed_just_above_starting_point():
    B, C = find_stable_seed(-5.0, 0.249)
    assert stability(DdeParams(-5.0, B, C, 0.249)) == "stable"


def test_boundary_contains_mrs_for_positive_A():
    res = stable_region_boundary(5.0, 0.3)
    poly = res.polygon
    diamond = shapely.Polygon(mrs(5.0).vertices)
    assert poly.buffer(1e-9).contains(diamond)
    assert res.area_ratio >= 1.0
    assert res.area == pytest.approx(poly.area)


def test_walk_matches_monte_carlo_oracle():
    # independent oracle: classify random points with the argument principle
    A, R = 4.0, 0.3
    res = stable_region_boundary(A, R)
    b0, c0, b1, c1 = res.polygon.bounds
    pad = 0.5
    b0, b1, c0, c1 = b0 - pad, b1 + pad, c0 - pad, c1 + pad
    rng = np.random.default_rng(7)
    n = 3000
    pts = rng.uniform([b0, c0], [b1, c1], size=(n, 2))
    stable = 0
    for B, C in pts:
        try:
            stable += count_unstable(DdeParams(A, B, C, R)).total_unstable == 0
        except E.ContourRootError:
            pass
    box_area = (b1 - b0) * (c1 - c0)
    est = stable / n * box_area
    sd = box_area * math.sqrt(stable / n * (1 - stable / n) / n)
    # other stable components would also be counted; none exist at these values
    assert abs(est - res.area) < 4 * sd


def test_raster_agrees_with_walk():
    A, R = 20.0, 0.3
    walk = stable_region_boundary(A, R)
    ras = stable_region_raster(A, R, resolution=200)
    assert abs(ras.area - walk.area) / walk.area < 0.01
    assert ras.spot_check_failures == 0


def test_region_below_zero_A():
    sp = starting_point(0.25)
    A = 0.5 * (sp.A0 + transition_A(1, 0.25))
    res = stable_region_boundary(A, 0.25)
    assert res.area > 0
    assert math.isnan(res.area_ratio) or res.area_ratio >= 0
    assert "Lambda_0" in res.boundary_tags and "Gamma_1" in res.boundary_tags


def test_tags_at_third_transition():
    R = 0.249
    res = stable_region_boundary(transition_A(3, R), R)
    assert {"Gamma_1", "Gamma_3", "Lambda_0"} <= set(res.boundary_tags)
    lengths = res.arc_lengths()
    assert lengths.get("Gamma_2", 0.0) > 0
    assert "Gamma_2" in res.dropped_tags


def test_area_ratio_fallback_signature():
    assert area_ratio(5.0, 0.3) == pytest.approx(stable_region_boundary(5.0, 0.3).area_ratio)


def test_asymptotic_n2():
    r = asymptotic_region(2)
    assert r.area_ratio == pytest.approx(2.0, abs=1e-3)
    assert r.linear_extension == pytest.approx(1.0, abs=1e-3)
    J = lambda0_gamma1_junction(r.region)
    assert J[0] + J[1] + r.A == pytest.approx(0.0, abs=1e-6 * r.A)


def test_writers(tmp_path):
    res = stable_region_boundary(5.0, 0.3)
    ras = stable_region_raster(5.0, 0.3, resolution=60)
    write_boundary_csv(tmp_path / "b.csv", res)
    write_region_csv(tmp_path / "r.csv", ras)
    head = (tmp_path / "b.csv").read_text().splitlines()
    assert head[0] == "tag,omega_or_t,B,C" and len(head) > 10
    assert (tmp_path / "r.csv").read_text().startswith("B,C,count\n")

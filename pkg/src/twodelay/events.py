"""Critical values of A where the make-up of the stability boundary changes.

Kinds of event, for curves Gamma_i (host) and Gamma_j (the curve that moves):

* transferral: Gamma_j starts to bound the region by passing through the
  vertex where Gamma_i meets Lambda_0 (for i = 1 that vertex is the
  omega -> 0 endpoint of Gamma_1);
* tangency: Gamma_j touches Gamma_i and starts to cut into the region;
* reverse_* variants: the same configurations with Gamma_j leaving. Reverse
  records list the leaving curve first, so ``(i, j) = (leaving, host)``;
* spur_start / spur_join: a detached stable island appears on Gamma_{j+1} and
  later merges with the main region at the transition A*_j.

``event_ladder`` finds changes by diffing the walked boundary tags on an
A-grid, isolates each by bisection and hands it to the dedicated solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bifcurves import (
    curve_arrays,
    curve_coefficients,
    curve_coefficients_d2,
    curve_domain,
    gamma1_limit,
    starting_point,
    transition_A,
    transition_point,
)
from .chareq import DdeParams, count_unstable
from .errors import (
    ContourRootError,
    InfiniteTransition,
    InvalidParameters,
    NoBracket,
    NoCusp,
    NonConvergence,
    OpenLoop,
    SeedUnstable,
    EmptyRegion,
)

KINDS = ("start", "transferral", "reverse_transferral", "tangency", "reverse_tangency", "spur_start", "spur_join")


@dataclass(frozen=True)
class EventRecord:
    kind: str
    i: int
    j: int
    A_value: float
    witness: tuple  # (omega_i, omega_j, B, C)
    R: float = math.nan
    residual: float = 0.0
    refined: bool = True


@dataclass(frozen=True)
class SpurRecord:
    j: int
    A_cusp: float
    A_join: float
    length: float
    cross_section_fraction: float
    A_island: float = math.nan
    witness: tuple = ()


# --------------------------------------------------------------------------
# geometry helpers


def _point(omega, A, R):
    """(B, C, dB, dC) on the curve; omega = 0 gives the Gamma_1 endpoint."""
    if omega == 0.0:
        B, C = gamma1_limit(A, R)
        return B, C, 0.0, 0.0
    B, C, dB, dC = curve_arrays(float(omega), A, R)
    return float(B), float(C), float(dB), float(dC)


def stable_normal(omega, B, C, A, R):
    """Unit normal pointing to the side where the root i*omega moves left."""
    lam = 1j * omega
    eB, eC = np.exp(-lam), np.exp(-lam * R)
    fp = 1.0 - B * eB - C * R * eC
    g = np.array([np.real(-eB / fp), np.real(-eC / fp)])
    n = np.hypot(*g)
    return -g / n if n > 0 else g


def _newton(F, x0, scale, tol=1e-13, maxit=60):
    """Newton iteration with a central-difference Jacobian and step halving."""
    x = np.array(x0, dtype=float)
    fx = F(x)
    for _ in range(maxit):
        n = len(x)
        J = np.empty((len(fx), n))
        for k in range(n):
            h = 1e-7 * scale[k]
            e = np.zeros(n)
            e[k] = h
            J[:, k] = (F(x + e) - F(x - e)) / (2 * h)
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -fx, rcond=None)[0]
        t = 1.0
        norm0 = np.linalg.norm(fx)
        while t > 1e-4:
            xn = x + t * step
            fn = F(xn)
            if np.all(np.isfinite(fn)) and np.linalg.norm(fn) < norm0 * (1 - 1e-4 * t) + 1e-300:
                break
            t *= 0.5
        else:
            xn, fn = x + step, F(x + step)
        x, fx = xn, fn
        if np.all(np.abs(step) <= tol * np.asarray(scale)) or np.linalg.norm(fx) < 1e-15:
            break
    return x, fx


def _inside(omega, j, R):
    lo, hi = curve_domain(j, R)
    return lo < omega < hi or (j == 1 and omega == 0.0)


def _on_stable_boundary(A, B, C, R) -> bool:
    """Roots off the imaginary axis all stable at the witness."""
    p = DdeParams(A, B, C, R)
    try:
        return count_unstable(p, eps=1e-6 * p.scale).total_unstable == 0
    except (ContourRootError, NonConvergence):
        return False


def _scan_roots(g, lo, hi, n=20001):
    """Sign-change roots of g on (lo, hi), skipping jumps through poles."""
    w = np.linspace(lo, hi, n + 2)[1:-1]
    y = g(w)
    ok = np.isfinite(y[:-1]) & np.isfinite(y[1:])
    idx = np.nonzero(ok & (np.sign(y[:-1]) * np.sign(y[1:]) < 0))[0]
    out = []
    for k in idx:
        try:
            out.append(brentq(g, w[k], w[k + 1], xtol=1e-15 * (1 + abs(w[k])), maxiter=200))
        except ValueError:
            continue
    return out


# --------------------------------------------------------------------------
# transferral


def _endpoint_crossings(j, R):
    """(omega, A) pairs where Gamma_j passes through the Gamma_1 endpoint."""
    lo, hi = curve_domain(j, R)
    s = 1.0 / (1.0 - R)
    p0B, q0B, p0C, q0C = R * s, s, -s, -s

    def parts(w):
        pB, qB, pC, qC = curve_coefficients(w, R)[:4]
        return pB - p0B, qB - q0B, pC - p0C, qC - q0C

    def h(w):
        a, b, c, d = parts(w)
        return (a * d - c * b) / (1.0 + np.abs(a * d) + np.abs(c * b))

    out = []
    for w in _scan_roots(h, lo, hi):
        a, b, c, d = (float(v) for v in parts(w))
        A = -b / a if abs(a) > abs(c) else -d / c
        B, C, _, _ = _point(w, A, R)
        P = gamma1_limit(A, R)
        if math.hypot(B - P[0], C - P[1]) <= 1e-6 * (1 + abs(A) + abs(B) + abs(C)):
            out.append((w, A))
    return out


def _lambda0_vertices(k, A, R):
    """Frequencies where Gamma_k meets Lambda_0 (0 is the Gamma_1 endpoint)."""
    lo, hi = curve_domain(k, R)

    def g(w):
        B, C, _, _ = curve_arrays(w, A, R)
        return (B + C + A) / (1.0 + np.abs(B) + np.abs(C) + abs(A))

    out = [0.0] if k == 1 else []
    out += [w for w in _scan_roots(g, lo, hi, 4001) if _inside(w, k, R)]
    return out


def _transfer_gap(lo, hi, w_lo, w_hi, A, R):
    """How far the vertex of Gamma_lo on Lambda_0 sits on the unstable side of Gamma_hi."""
    Bv, Cv, _, _ = _point(w_lo, A, R)

    def F(x):
        B, C, dB, dC = _point(x[0], A, R)
        return np.array([(B - Bv) * dB + (C - Cv) * dC])

    x, _ = _newton(F, [w_hi], [1.0 + abs(w_hi)])
    B, C, _, _ = _point(x[0], A, R)
    n = stable_normal(x[0], B, C, A, R)
    return -float((Bv - B) * n[0] + (Cv - C) * n[1]) * 1.0, x[0]


def find_transferral(i: int, j: int, R: float, A_bracket, seed=None) -> EventRecord:
    """Solve for A where Gamma_i and Gamma_j meet on Lambda_0.

    Forward when the higher-index curve starts to bound the region as A grows
    (it then cuts off the vertex of the lower-index curve), reverse otherwise.
    """
    a_lo, a_hi = float(A_bracket[0]), float(A_bracket[1])
    if not a_lo < a_hi:
        raise InvalidParameters("A_bracket must be increasing")
    lo, hi = sorted((int(i), int(j)))
    if lo < 1 or lo == hi:
        raise InvalidParameters("need two distinct curve indices >= 1")
    width = a_hi - a_lo
    sols = []
    if lo == 1:
        for w, A in _endpoint_crossings(hi, R):
            if a_lo - 1e-9 * width <= A <= a_hi + 1e-9 * width:
                sols.append((0.0, w, A))
    else:
        grid = np.linspace(a_lo, a_hi, 41) if seed is None else [seed[2]]
        seeds = []
        for A in grid:
            for w_lo in _lambda0_vertices(lo, A, R):
                B, C, _, _ = _point(w_lo, A, R)
                dlo, dhi = curve_domain(hi, R)
                ws = np.linspace(dlo, dhi, 4002)[1:-1]
                Bs, Cs, _, _ = curve_arrays(ws, A, R)
                d = np.hypot(Bs - B, Cs - C)
                k = int(np.argmin(d))
                seeds.append((d[k], w_lo, ws[k], A))
        seeds.sort()
        if seed is not None:
            seeds = [(0.0,) + tuple(seed)]
        for _, w_lo, w_hi, A in seeds[:8]:
            def F(x):
                B1, C1, _, _ = _point(x[0], x[2], R)
                B2, C2, _, _ = _point(x[1], x[2], R)
                return np.array([B1 - B2, C1 - C2, B1 + C1 + x[2]]) / (1.0 + abs(x[2]))

            x, fx = _newton(F, [w_lo, w_hi, A], [1 + abs(w_lo), 1 + abs(w_hi), 1 + abs(A)])
            if np.linalg.norm(fx) < 1e-10 and a_lo - 1e-6 * width <= x[2] <= a_hi + 1e-6 * width \
                    and _inside(x[0], lo, R) and _inside(x[1], hi, R):
                sols.append(tuple(x))
    if not sols:
        raise NoBracket(f"no meeting of Gamma_{lo} and Gamma_{hi} on Lambda_0 for A in [{a_lo}, {a_hi}]")
    mid = 0.5 * (a_lo + a_hi)
    w_lo, w_hi, A = min(sols, key=lambda s: abs(s[2] - mid))
    B, C, _, _ = _point(w_hi, A, R)
    B1, C1, _, _ = _point(w_lo, A, R)
    res = max(abs(B - B1), abs(C - C1), abs(B1 + C1 + A))
    d = 1e-6 * (1.0 + abs(A))
    gp, _ = _transfer_gap(lo, hi, w_lo if lo == 1 else _near_vertex(lo, w_lo, A + d, R), w_hi, A + d, R)
    gm, _ = _transfer_gap(lo, hi, w_lo if lo == 1 else _near_vertex(lo, w_lo, A - d, R), w_hi, A - d, R)
    forward = gp > gm
    if forward:
        return EventRecord("transferral", lo, hi, A, (w_lo, w_hi, B, C), R, res)
    return EventRecord("reverse_transferral", hi, lo, A, (w_hi, w_lo, B, C), R, res)


def _near_vertex(k, w0, A, R):
    def F(x):
        B, C, _, _ = _point(x[0], A, R)
        return np.array([(B + C + A) / (1 + abs(A))])

    x, _ = _newton(F, [w0], [1 + abs(w0)])
    return float(x[0])


# --------------------------------------------------------------------------
# tangency


def _closest_pair(lo, hi, w_lo, w_hi, A, R):
    """Pair of parallel-tangent points nearest the guess; returns (w_lo, w_hi, gap).

    ``gap`` is how far Gamma_hi reaches past Gamma_lo toward the stable side
    of Gamma_lo (positive when Gamma_hi cuts into it).
    """

    def F(x):
        B1, C1, dB1, dC1 = _point(x[0], A, R)
        B2, C2, dB2, dC2 = _point(x[1], A, R)
        n1, n2 = math.hypot(dB1, dC1), math.hypot(dB2, dC2)
        return np.array([
            (dB1 * dC2 - dC1 * dB2) / (n1 * n2),
            ((B2 - B1) * dB1 + (C2 - C1) * dC1) / (n1 * (1 + abs(A))),
        ])

    x, fx = _newton(F, [w_lo, w_hi], [1 + abs(w_lo), 1 + abs(w_hi)])
    B1, C1, _, _ = _point(x[0], A, R)
    B2, C2, _, _ = _point(x[1], A, R)
    n = stable_normal(x[0], B1, C1, A, R)
    return x[0], x[1], float((B2 - B1) * n[0] + (C2 - C1) * n[1])


def _tangency_seeds(lo, hi, A, R, grid=200, keep=10):
    """Closest-approach pairs with nearly parallel tangents on a grid."""
    bound = 10.0 * (10.0 + abs(A))
    out = []
    ws = []
    for k in (lo, hi):
        a, b = curve_domain(k, R)
        w = np.linspace(a, b, 20 * grid + 2)[1:-1]
        B, C, dB, dC = curve_arrays(w, A, R)
        ok = (np.abs(B) < bound) & (np.abs(C) < bound)
        w = w[ok]
        if len(w) == 0:
            return []
        ws.append(w[np.linspace(0, len(w) - 1, min(grid, len(w))).astype(int)])
    w1, w2 = ws
    B1, C1, dB1, dC1 = curve_arrays(w1, A, R)
    B2, C2, dB2, dC2 = curve_arrays(w2, A, R)
    D = np.hypot(B1[:, None] - B2[None, :], C1[:, None] - C2[None, :])
    cr = np.abs(dB1[:, None] * dC2[None, :] - dC1[:, None] * dB2[None, :])
    cr /= np.hypot(dB1, dC1)[:, None] * np.hypot(dB2, dC2)[None, :]
    score = D / (1.0 + abs(A)) + 0.1 * cr
    flat = np.argsort(score, axis=None)[: keep * 20]
    for f in flat:
        a, b = np.unravel_index(f, score.shape)
        cand = (float(w1[a]), float(w2[b]))
        if all(abs(cand[0] - c[0]) + abs(cand[1] - c[1]) > 0.05 for c in out):
            out.append(cand)
        if len(out) >= keep:
            break
    return out


def _solve_tangency(lo, hi, w_lo, w_hi, A, R):
    def F(x):
        B1, C1, dB1, dC1 = _point(x[0], x[2], R)
        B2, C2, dB2, dC2 = _point(x[1], x[2], R)
        s = 1.0 + abs(x[2])
        n1, n2 = math.hypot(dB1, dC1), math.hypot(dB2, dC2)
        return np.array([(B1 - B2) / s, (C1 - C2) / s, (dB1 * dC2 - dC1 * dB2) / (n1 * n2)])

    return _newton(F, [w_lo, w_hi, A], [1 + abs(w_lo), 1 + abs(w_hi), 1 + abs(A)])


def find_tangency(i: int, j: int, R: float, A_bracket, seed=None) -> EventRecord:
    """Solve for A where Gamma_i and Gamma_j touch tangentially on the boundary.

    ``seed`` is an optional guess ``(omega_i, omega_j, A)``. The higher-index
    curve is the one that enters (forward, d gap/dA > 0) or leaves (reverse).
    """
    a_lo, a_hi = float(A_bracket[0]), float(A_bracket[1])
    if not a_lo < a_hi:
        raise InvalidParameters("A_bracket must be increasing")
    lo, hi = sorted((int(i), int(j)))
    if lo < 1 or lo == hi:
        raise InvalidParameters("need two distinct curve indices >= 1")
    width = a_hi - a_lo
    starts = []
    if seed is not None:
        s = (seed[0], seed[1]) if int(i) == lo else (seed[1], seed[0])
        starts.append((s[0], s[1], float(seed[2])))
    else:
        for A in np.linspace(a_lo, a_hi, 5):
            starts += [(p, q, A) for p, q in _tangency_seeds(lo, hi, A, R)]
    sols = []
    for w1, w2, A in starts:
        x, fx = _solve_tangency(lo, hi, w1, w2, A, R)
        if not (np.all(np.isfinite(x)) and np.linalg.norm(fx) < 1e-9):
            continue
        if not (a_lo - 1e-6 * (1 + width) <= x[2] <= a_hi + 1e-6 * (1 + width)):
            continue
        if not (_inside(x[0], lo, R) and _inside(x[1], hi, R)):
            continue
        if any(np.allclose(x, s, rtol=1e-7, atol=1e-9) for s in sols):
            continue
        sols.append(x)
    if not sols:
        raise NoBracket(f"no tangency of Gamma_{lo} and Gamma_{hi} for A in [{a_lo}, {a_hi}]")

    def rank(x):
        B, C, _, _ = _point(x[0], x[2], R)
        return (not _on_stable_boundary(x[2], B, C, R), abs(x[2] - 0.5 * (a_lo + a_hi)))

    x = min(sols, key=rank)
    w_lo, w_hi, A = (float(v) for v in x)
    B, C, dB, dC = _point(w_lo, A, R)
    B2, C2, dB2, dC2 = _point(w_hi, A, R)
    res = max(abs(B - B2), abs(C - C2),
              abs(dB * dC2 - dC * dB2) / (math.hypot(dB, dC) * math.hypot(dB2, dC2)) * (1 + abs(A)))
    d = 1e-5 * (1.0 + abs(A))
    gp = _closest_pair(lo, hi, w_lo, w_hi, A + d, R)[2]
    gm = _closest_pair(lo, hi, w_lo, w_hi, A - d, R)[2]
    if gp > gm:
        return EventRecord("tangency", lo, hi, A, (w_lo, w_hi, B, C), R, res)
    return EventRecord("reverse_tangency", hi, lo, A, (w_hi, w_lo, B, C), R, res)


# --------------------------------------------------------------------------
# spurs


def _fold_births(k, R, which="C"):
    """(omega, A) where d/domega of the chosen coordinate on Gamma_k has a double zero."""
    lo, hi = curve_domain(k, R)
    slot = 2 if which == "C" else 0

    def parts(w):
        d1 = curve_coefficients(w, R)[4:]
        d2 = curve_coefficients_d2(w, R)
        return d1[slot], d1[slot + 1], d2[slot], d2[slot + 1]

    def g(w):
        dp, dq, d2p, d2q = parts(w)
        v = dp * d2q - dq * d2p
        return v / (1.0 + np.abs(dp * d2q) + np.abs(dq * d2p))

    out = []
    for w in _scan_roots(g, lo, hi):
        dp, dq, d2p, d2q = (float(v) for v in parts(w))
        A = -dq / dp
        if abs(A * d2p + d2q) <= 1e-6 * (abs(A * d2p) + abs(d2q) + 1.0):
            out.append((w, A))
    return out


def _cusps(k, R):
    """(omega, A) where dB and dC vanish together on Gamma_k."""
    lo, hi = curve_domain(k, R)

    def parts(w):
        return curve_coefficients(w, R)[4:]

    def g(w):
        dpB, dqB, dpC, dqC = parts(w)
        v = dpB * dqC - dqB * dpC
        return v / (1.0 + np.abs(dpB * dqC) + np.abs(dqB * dpC))

    out = []
    for w in _scan_roots(g, lo, hi):
        dpB, dqB, dpC, dqC = (float(v) for v in parts(w))
        A = -dqC / dpC
        if abs(A * dpB + dqB) <= 1e-6 * (abs(A * dpB) + abs(dqB) + 1.0):
            out.append((w, A))
    return out


def spur_cross_section(j: int, R: float, A: float | None = None) -> float:
    """Share of the stable area held by spur j at A (default: its join value)."""
    from .region import stable_region_boundary

    if A is None:
        A = transition_A(j, R)
    t = transition_point(j, R)
    res = stable_region_boundary(A, R, all_faces=True)
    import shapely

    star = shapely.Point(t.B_star, t.C_star)
    faces = [res.polygon] + list(res.other_stable)
    total = sum(f.area for f in faces)
    main = max(faces, key=lambda f: f.area)
    tol = 1e-6 * (1.0 + abs(A) + abs(t.B_star) + abs(t.C_star))
    spur = sum(f.area for f in faces if f is not main and f.distance(star) <= tol)
    return spur / total if total > 0 else math.nan


def find_spur(j: int, R: float, with_fraction: bool = True) -> SpurRecord:
    """Stability spur that merges with the main region at A*_j.

    The spur's start is where C(omega) on Gamma_{j+1} acquires a fold, i.e.
    where dC/domega gains a double zero, taking the nearest such A below A*_j.
    The cusp (dB = dC = 0) is reported as ``A_island``.
    """
    A_join = transition_A(j, R)
    if not math.isfinite(A_join):
        raise InfiniteTransition(f"A*_{j} is infinite at R={R}")
    reach = 1.0 + abs(A_join)
    folds = [(w, A) for w, A in _fold_births(j + 1, R, "C") if A_join - reach < A < A_join]
    if not folds:
        raise NoCusp(f"no fold of Gamma_{j + 1} below A*_{j}={A_join:.6g}")
    w, A_cusp = max(folds, key=lambda t: t[1])
    cusps = [(cw, ca) for cw, ca in _cusps(j + 1, R) if A_join - reach < ca < A_join]
    A_island = max((ca for _, ca in cusps), default=math.nan)
    B, C, _, _ = _point(w, A_cusp, R)
    frac = spur_cross_section(j, R, A_join) if with_fraction else math.nan
    return SpurRecord(j, A_cusp, A_join, A_join - A_cusp, frac, A_island, (w, w, B, C))


# --------------------------------------------------------------------------
# ladder


def _tags(res):
    return frozenset(a.tag for a in res.boundary if a.kind == "gamma")


def _neighbours(res, tag):
    """Tags adjacent to the shortest arc carrying ``tag`` and that arc."""
    arcs = res.boundary
    idx = [k for k, a in enumerate(arcs) if a.tag == tag]
    k = min(idx, key=lambda m: arcs[m].length)
    n = len(arcs)
    return arcs[(k - 1) % n], arcs[(k + 1) % n], arcs[k]


def _ladder_grid(A0, A_max, ratio, avoid):
    pts = list(np.arange(A0 + 0.25, min(1.0, A_max), 0.25))
    a = 1.0
    while a < A_max:
        pts.append(a)
        a *= ratio
    pts.append(A_max)
    out = []
    for p in sorted(set(pts)):
        if p <= A0 or any(abs(p - t) <= 1e-6 * (1 + abs(t)) for t in avoid):
            continue
        out.append(float(p))
    return out


def _finite_transitions(R, A_lo, A_hi):
    out = {}
    j = 1
    while True:
        lo, _ = curve_domain(j, R)
        # a curve this far out cannot reach a region of size ~|A|
        if lo > 4.0 * (abs(A_hi) + 10.0) and j > 3:
            return out
        a = transition_A(j, R)
        if math.isfinite(a) and A_lo < a <= A_hi:
            out[j] = a
        j += 1


def relevant_transitions(R: float, A_max: float) -> dict:
    """Finite A*_j in (A0, A_max] whose degeneracy point touches the stable region.

    Most finite A*_j put (B*, C*) deep in the unstable zone, where nothing
    about the stable boundary changes.
    """
    out = {}
    for j, a in _finite_transitions(R, starting_point(R).A0, A_max).items():
        t = transition_point(j, R)
        if a + t.B_star + t.C_star < -1e-9 * (1.0 + abs(a)):
            continue
        if _on_stable_boundary(a, t.B_star, t.C_star, R):
            out[j] = a
    return out


def event_ladder(R: float, A_max: float, ratio: float = 1.05, walk_opts=None, progress=None,
                 tol: float = 1e-4) -> list[EventRecord]:
    """Every boundary change for A0(R) < A <= A_max, sorted by A.

    Changes are bisected down to ``tol * (1 + |A|)`` before refinement.
    """
    from .region import stable_region_boundary

    sp = starting_point(R)
    if not A_max > sp.A0:
        raise InvalidParameters(f"A_max must exceed A0={sp.A0:.6g}")
    walk_opts = walk_opts or {}
    events = [EventRecord("start", 0, 0, sp.A0, (0.0, 0.0, sp.B0, sp.C0), R)]
    trans = relevant_transitions(R, A_max)
    all_trans = _finite_transitions(R, sp.A0, A_max)
    for j, a in sorted(trans.items()):
        t = transition_point(j, R)
        try:
            sp_rec = find_spur(j, R, with_fraction=False)
            events.append(EventRecord("spur_start", j, j + 1, sp_rec.A_cusp, sp_rec.witness, R))
        except NoCusp:
            pass
        w0 = j * math.pi / (1.0 - R)
        events.append(EventRecord("spur_join", j, j + 1, a, (w0, w0, t.B_star, t.C_star), R))

    cache = {}

    def walk(A):
        if A not in cache:
            try:
                cache[A] = stable_region_boundary(A, R, **walk_opts)
            except (SeedUnstable, EmptyRegion, OpenLoop, NonConvergence, ContourRootError):
                cache[A] = None
        return cache[A]

    rel = tol

    def tol(A):
        return rel * (1.0 + abs(A))

    changes = []

    def isolate(a, ra, b, rb):
        ta, tb = _tags(ra), _tags(rb)
        if ta == tb:
            return
        if b - a <= tol(b) or len(ta ^ tb) == 1 and b - a <= tol(b):
            changes.append((a, ra, b, rb))
            return
        m = 0.5 * (a + b)
        if any(abs(m - t) <= 1e-6 * (1 + abs(t)) for t in trans.values()):
            m = 0.5 * (a + m)
        rm = walk(m)
        if rm is None:
            changes.append((a, ra, b, rb))
            return
        isolate(a, ra, m, rm)
        isolate(m, rm, b, rb)

    grid = _ladder_grid(sp.A0, A_max, ratio, trans.values())
    prev = None
    for A in grid:
        r = walk(A)
        if r is None:
            continue
        if prev is not None:
            isolate(prev[0], prev[1], A, r)
        prev = (A, r)
        if progress:
            progress(A)

    for a, ra, b, rb in changes:
        # a spur join reshapes the boundary at A*_j; changes that coincide with
        # it are kept only when a solver confirms them as separate events
        at_join = any(a - tol(a) <= t <= b + tol(b) for t in trans.values())
        ta, tb = set(_tags(ra)), set(_tags(rb))
        # at any finite A*_j the pole between Gamma_j and Gamma_{j+1} closes, so
        # a boundary arc may just change label from one to the other
        for j, t in all_trans.items():
            pair = {f"Gamma_{j}", f"Gamma_{j + 1}"}
            if a - tol(a) <= t <= b + tol(b) and len(pair & ta) == 1 and len(pair & tb) == 1 and pair & ta != pair & tb:
                ta -= pair
                tb -= pair
        found = [_refine_change(int(tag.split("_")[1]), True, a, b, rb, R) for tag in sorted(tb - ta)]
        found += [_refine_change(int(tag.split("_")[1]), False, a, b, ra, R) for tag in sorted(ta - tb)]
        for ev in found:
            if at_join and not ev.refined:
                continue
            if any((e.kind, e.i, e.j) == (ev.kind, ev.i, ev.j) and abs(e.A_value - ev.A_value) <= tol(ev.A_value)
                   for e in events):
                continue
            events.append(ev)
    events.sort(key=lambda e: (e.A_value, KINDS.index(e.kind)))
    return events


def _refine_change(k, entering, a, b, res, R) -> EventRecord:
    prev, nxt, arc = _neighbours(res, f"Gamma_{k}")
    others = [x for x in (prev, nxt) if not (x.kind == "gamma" and x.j == k)]
    at_lambda0 = any(x.kind == "lambda0" for x in others)
    hosts = [x for x in others if x.kind == "gamma"]
    host = hosts[0] if hosts else None
    w_k = 0.5 * (arc.param_start + arc.param_end)
    A_guess = b if entering else a
    # walk tolerances can shift the visible change a little; search wider
    pad = max(b - a, 2e-3 * (1.0 + abs(A_guess)))
    bracket = (a - pad, b + pad)
    kind_base = "transferral" if at_lambda0 else "tangency"
    if host is not None:
        if host is prev:
            w_h = host.param_end
        else:
            w_h = host.param_start
        try:
            if at_lambda0:
                ev = find_transferral(host.j, k, R, bracket)
            else:
                try:
                    ev = find_tangency(host.j, k, R, bracket, seed=(w_h, w_k, A_guess))
                except NoBracket:
                    ev = find_tangency(host.j, k, R, bracket)
            kind = kind_base if entering else "reverse_" + kind_base
            i, j = (host.j, k) if entering else (k, host.j)
            wi, wj = (ev.witness[0], ev.witness[1])
            if (ev.i, ev.j) != (i, j):
                wi, wj = wj, wi
            return EventRecord(kind, i, j, ev.A_value, (wi, wj, ev.witness[2], ev.witness[3]), R, ev.residual)
        except (NoBracket, NonConvergence):
            pass
    i = host.j if host is not None else 0
    kind = kind_base if entering else "reverse_" + kind_base
    ij = (i, k) if entering else (k, i)
    B = float(arc.B[len(arc.B) // 2])
    C = float(arc.C[len(arc.C) // 2])
    return EventRecord(kind, ij[0], ij[1], 0.5 * (a + b), (math.nan, w_k, B, C), R, math.nan, refined=False)


def atlas_sweep(R_lo: float, R_hi: float, steps: int, A_max: float, ladder: bool = True, ratio: float = 1.05,
                threads: int = 1) -> dict:
    """Event values per R on an even R-grid; failures are recorded, not raised."""
    if not (0.0 < R_lo < R_hi < 1.0):
        raise InvalidParameters("need 0 < R_lo < R_hi < 1")
    Rs = [float(R) for R in np.linspace(R_lo, R_hi, int(steps))]
    args = [(R, A_max, ladder, ratio) for R in Rs]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(_atlas_column, args))
    else:
        cols = [_atlas_column(a) for a in args]
    return dict(zip(Rs, cols))


def _atlas_column(args) -> dict:
    R, A_max, ladder, ratio = args
    col = {"A0": starting_point(R).A0, "errors": []}
    col["transitions"] = _finite_transitions(R, col["A0"], A_max)
    col["events"] = []
    if ladder:
        try:
            col["events"] = [event_dict(e) for e in event_ladder(R, A_max, ratio=ratio)]
        except Exception as exc:  # keep sweeping; the column records why it stopped
            col["errors"].append(f"{type(exc).__name__}: {exc}")
    return col


def event_dict(e: EventRecord) -> dict:
    return {
        "kind": e.kind,
        "i": e.i,
        "j": e.j,
        "A": e.A_value,
        "omega_i": e.witness[0],
        "omega_j": e.witness[1],
        "B": e.witness[2],
        "C": e.witness[3],
        "refined": e.refined,
    }


def write_events_csv(path, events) -> None:
    from .io import write_csv

    rows = [(e.R, e.kind, e.i, e.j, e.A_value, e.witness[2], e.witness[3]) for e in events]
    write_csv(path, ("R", "kind", "i", "j", "A", "B_witness", "C_witness"), rows)

"""Stability region of the two-delay equation in the BC-plane at fixed (A, R).

Two independent routes measure the region:

* ``stable_region_boundary`` builds the arrangement of the curves Gamma_j,
  the real-root line Lambda_0 and (at exact transitions) the degeneracy
  lines Delta_j, nodes it, and extracts the face that contains a known stable
  seed. Arcs are tagged by their source curve and the area comes from the
  shoelace rule.
* ``stable_region_raster`` classifies a grid of cells by propagating the
  unstable-root count from the seed: crossing a curve changes the count by
  +-2 (+-1 across Lambda_0) with the sign given by how the crossing root moves.
  Spot checks against the argument-principle oracle guard the propagation.

The set of curves is chosen by a rigorous cutoff: on Gamma_j the frequency
satisfies omega = B sin(omega) + C sin(omega R) <= |B| + |C|, so only curves
with (j-1) pi / (1-R) < max(|B|+|C|) can reach a given diamond.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bifcurves import (
    curve_domain,
    sample_curve_runs,
    starting_point,
    transition_A,
    transition_point,
)
from .chareq import DdeParams, count_unstable, stability
from .errors import (
    ContourRootError,
    EmptyRegion,
    NonConvergence,
    NonpositiveA,
    OpenLoop,
    SeedUnstable,
)

TRANSITION_TOL = 1e-9
INITIAL_CURVES = 10


@dataclass(frozen=True)
class MrsDiamond:
    """The diamond |B| + |C| < A, stable for every delay ratio."""

    A: float

    @property
    def vertices(self):
        a = self.A
        return ((a, 0.0), (0.0, a), (-a, 0.0), (0.0, -a))

    @property
    def area(self) -> float:
        return 2.0 * self.A**2

    def contains(self, B, C):
        return np.abs(B) + np.abs(C) < self.A


def mrs(A: float) -> MrsDiamond:
    if not A > 0:
        raise NonpositiveA(f"the minimal stable diamond needs A > 0, got {A!r}")
    return MrsDiamond(float(A))


def curve_bound(M: float, R: float) -> int:
    """Largest curve index that can meet the diamond |B| + |C| <= M."""
    return int(math.ceil(M * (1.0 - R) / math.pi)) + 1


def exact_transitions(A: float, R: float, jmax: int) -> list[int]:
    """Indices j <= jmax whose transition value equals A (to rounding)."""
    out = []
    for j in range(1, jmax + 1):
        a = transition_A(j, R)
        if math.isfinite(a) and abs(A - a) <= TRANSITION_TOL * (1.0 + abs(A)):
            out.append(j)
    return out


def default_box(A: float, R: float) -> tuple[float, float, float, float]:
    sp = starting_point(R)
    w = 2.2 * max(abs(A), abs(sp.B0) + abs(sp.C0), 1.0) + 2.0
    return (-w, w, -w, w)


def _grow(box, factor=1.6):
    b0, b1, c0, c1 = box
    mb, mc = 0.5 * (b0 + b1), 0.5 * (c0 + c1)
    hb, hc = 0.5 * (b1 - b0) * factor, 0.5 * (c1 - c0) * factor
    return (mb - hb, mb + hb, mc - hc, mc + hc)


# --------------------------------------------------------------------------
# curve arrangement


@dataclass
class Piece:
    """One polyline of the arrangement.

    ``param`` is omega along a Gamma curve and the B coordinate along a line.
    """

    kind: str  # "gamma", "lambda0", "delta"
    j: int
    B: np.ndarray
    C: np.ndarray
    param: np.ndarray

    @property
    def tag(self) -> str:
        if self.kind == "gamma":
            return f"Gamma_{self.j}"
        if self.kind == "delta":
            return f"Delta_{self.j}"
        return "Lambda_0"


def _clip_line(point, direction, box, pad=0.01):
    """Two-point piece of the infinite line, clipped to a slightly padded box."""
    b0, b1, c0, c1 = box
    pb, pc = pad * (b1 - b0), pad * (c1 - c0)
    lo, hi = -math.inf, math.inf
    for p, d, a, b in (
        (point[0], direction[0], b0 - pb, b1 + pb),
        (point[1], direction[1], c0 - pc, c1 + pc),
    ):
        if d == 0:
            if not a <= p <= b:
                return None
            continue
        t0, t1 = (a - p) / d, (b - p) / d
        lo, hi = max(lo, min(t0, t1)), min(hi, max(t0, t1))
    if lo >= hi:
        return None
    t = np.array([lo, hi])
    return point[0] + t * direction[0], point[1] + t * direction[1]


def _extend(Bs, Cs, at_start: bool, dist: float):
    """Push a T-junction end slightly past the curve it stops on."""
    if len(Bs) < 2:
        return Bs, Cs
    if at_start:
        d = np.array([Bs[0] - Bs[1], Cs[0] - Cs[1]])
    else:
        d = np.array([Bs[-1] - Bs[-2], Cs[-1] - Cs[-2]])
    n = np.hypot(*d)
    if n == 0:
        return Bs, Cs
    e = d / n * dist
    if at_start:
        return np.r_[Bs[0] + e[0], Bs], np.r_[Cs[0] + e[1], Cs]
    return np.r_[Bs, Bs[-1] + e[0]], np.r_[Cs, Cs[-1] + e[1]]


def gamma_pieces(j, A, R, box, max_arc, trans=(), max_turn=0.1) -> list[Piece]:
    lo, hi = curve_domain(j, R)
    left = right = None
    if j >= 2 and (j - 1) in trans:
        t = transition_point(j - 1, R)
        left = (t.B_star, t.C_star)
    if j in trans:
        t = transition_point(j, R)
        right = (t.B_star, t.C_star)
    runs = sample_curve_runs(j, A, R, box, max_arc=max_arc, max_turn=max_turn, snap=(left, right))
    ext = 1e-7 * (1.0 + abs(A))
    out = []
    for w, Bs, Cs, _, _ in runs:
        w = np.asarray(w, dtype=float)
        if w[0] == lo and (lo == 0.0 or left is not None):
            Bs, Cs = _extend(Bs, Cs, True, ext)
            w = np.r_[w[0], w]
        if w[-1] == hi and right is not None:
            Bs, Cs = _extend(Bs, Cs, False, ext)
            w = np.r_[w, w[-1]]
        out.append(Piece("gamma", j, np.asarray(Bs), np.asarray(Cs), w))
    return out


def line_pieces(A, R, box, trans=()) -> list[Piece]:
    out = []
    seg = _clip_line((0.0, -A), (1.0, -1.0), box)
    if seg is not None:
        out.append(Piece("lambda0", 0, seg[0], seg[1], seg[0].copy()))
    for j in trans:
        t = transition_point(j, R)
        seg = _clip_line((t.B_star, t.C_star), (1.0, float(-t.parity)), box)
        if seg is not None:
            out.append(Piece("delta", j, seg[0], seg[1], seg[0].copy()))
    return out


def build_pieces(A, R, box, js, max_arc) -> list[Piece]:
    trans = exact_transitions(A, R, max(js) + 1 if js else 1)
    pieces = line_pieces(A, R, box, trans)
    for j in sorted(js):
        pieces.extend(gamma_pieces(j, A, R, box, max_arc, trans))
    return pieces


def _initial_curves(A, R, box) -> set[int]:
    M = max(abs(box[0]), abs(box[1])) + max(abs(box[2]), abs(box[3]))
    js = set(range(1, min(curve_bound(M, R), INITIAL_CURVES) + 1))
    for j in exact_transitions(A, R, curve_bound(M, R)):
        js |= {j, j + 1}
    return js


# --------------------------------------------------------------------------
# seed


def find_stable_seed(A: float, R: float) -> tuple[float, float]:
    """A BC point verified stable by the root-count oracle.

    (0, 0) lies inside the minimal diamond when A > 0. Below that the region
    is a wedge opening from the endpoint of Gamma_1 on Lambda_0, so candidate
    points are placed along the bisectors of that wedge; a coarse grid search
    is the last resort.
    """
    sp = starting_point(R)
    if A <= sp.A0:
        raise EmptyRegion(f"no stable (B, C) exists for A={A} <= A0={sp.A0:.6g}")
    if A > 0:
        return (0.0, 0.0)
    from .bifcurves import curve_arrays, gamma1_limit

    P0 = np.array(gamma1_limit(A, R))
    scale = abs(sp.B0) + abs(sp.C0) + abs(A)
    w = 1e-2
    Bw, Cw, _, _ = curve_arrays(w, A, R)
    d = np.array([Bw, Cw]) - P0
    d /= np.hypot(*d)
    u = np.array([1.0, -1.0]) / math.sqrt(2.0)
    for r in scale * np.array([1e-6, 1e-5, 1e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3]):
        for s in (1.0, -1.0):
            for v in (d + s * u, -d + s * u):
                v = v / np.hypot(*v)
                P = P0 + r * v
                if stability(DdeParams(A, P[0], P[1], R)) == "stable":
                    return (float(P[0]), float(P[1]))
    box = default_box(A, R)
    for Bv in np.linspace(box[0], box[1], 41):
        for Cv in np.linspace(box[2], box[3], 41):
            if stability(DdeParams(A, Bv, Cv, R)) == "stable":
                return (float(Bv), float(Cv))
    raise SeedUnstable(f"no stable point found for A={A}, R={R}")


# --------------------------------------------------------------------------
# boundary walk


@dataclass
class BoundaryArc:
    tag: str
    kind: str
    j: int
    param_start: float
    param_end: float
    length: float
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)


@dataclass
class RegionResult:
    A: float
    R: float
    boundary: list
    area: float
    area_ratio: float
    boundary_tags: list
    loop: np.ndarray = field(repr=False)
    method: str = "walk"
    approximate: bool = False
    box: tuple = ()
    curves: list = field(default_factory=list)
    dropped_tags: list = field(default_factory=list)
    other_stable: list = field(default_factory=list, repr=False)
    polygon: object = field(default=None, repr=False)

    def arc_lengths(self) -> dict:
        out: dict = {}
        for arc in self.boundary:
            out[arc.tag] = out.get(arc.tag, 0.0) + arc.length
        return out

    def summary(self) -> dict:
        return {
            "A": self.A,
            "R": self.R,
            "area": self.area,
            "area_ratio": self.area_ratio,
            "boundary_tags": list(self.boundary_tags),
            "method": self.method,
            "approximate": self.approximate,
        }


def _ratio(area, A):
    return area / (2.0 * A * A) if A > 0 else math.nan


def _segment_table(pieces):
    xs0, ys0, xs1, ys1, pid, p0, p1 = [], [], [], [], [], [], []
    for i, pc in enumerate(pieces):
        n = len(pc.B) - 1
        if n < 1:
            continue
        xs0.append(pc.B[:-1]); ys0.append(pc.C[:-1])
        xs1.append(pc.B[1:]); ys1.append(pc.C[1:])
        pid.append(np.full(n, i))
        par = pc.param if len(pc.param) == len(pc.B) else np.interp(
            np.arange(n + 1), [0, n], [pc.param[0], pc.param[-1]])
        p0.append(par[:-1]); p1.append(par[1:])
    cat = np.concatenate
    return cat(xs0), cat(ys0), cat(xs1), cat(ys1), cat(pid), cat(p0), cat(p1)


def _tag_ring(coords, pieces, seg):
    """Split a closed ring into arcs labelled by their source piece."""
    import shapely

    x0, y0, x1, y1, pid, p0, p1 = seg
    tree = shapely.STRtree(shapely.linestrings(np.stack([np.c_[x0, y0], np.c_[x1, y1]], axis=1)))
    mids = 0.5 * (coords[:-1] + coords[1:])
    idx = tree.query_nearest(shapely.points(mids), return_distance=False, all_matches=False)[1]
    owner = pid[idx]
    dx, dy = x1[idx] - x0[idx], y1[idx] - y0[idx]
    L2 = np.where(dx * dx + dy * dy > 0, dx * dx + dy * dy, 1.0)
    t = np.clip(((mids[:, 0] - x0[idx]) * dx + (mids[:, 1] - y0[idx]) * dy) / L2, 0.0, 1.0)
    par = p0[idx] + t * (p1[idx] - p0[idx])
    n = len(owner)
    change = np.nonzero(owner != np.roll(owner, 1))[0]
    start = int(change[0]) if len(change) else 0
    order = (np.arange(n) + start) % n
    arcs = []
    k = 0
    while k < n:
        m = k
        while m + 1 < n and owner[order[m + 1]] == owner[order[k]]:
            m += 1
        ids = order[k : m + 1]
        pc = pieces[owner[ids[0]]]
        pts = np.vstack([coords[ids], coords[ids[-1] + 1][None]])
        length = float(np.sum(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))))
        arcs.append(
            BoundaryArc(pc.tag, pc.kind, pc.j, float(par[ids[0]]), float(par[ids[-1]]), length, pts[:, 0], pts[:, 1])
        )
        k = m + 1
    return arcs


def _faces(pieces, box):
    import shapely
    from shapely.ops import polygonize

    b0, b1, c0, c1 = box
    lines = [shapely.LineString(np.c_[pc.B, pc.C]) for pc in pieces if len(pc.B) >= 2]
    lines.append(shapely.LineString([(b0, c0), (b1, c0), (b1, c1), (b0, c1), (b0, c0)]))
    noded = shapely.unary_union(lines)
    return list(polygonize(getattr(noded, "geoms", [noded])))


def _intruders(candidates, A, R, face, max_arc):
    """Curves among ``candidates`` that cut into the interior of ``face``."""
    import shapely
    from shapely.prepared import prep

    bx = face.bounds
    pad = 1e-3 * max(bx[2] - bx[0], bx[3] - bx[1])
    box = (bx[0] - pad, bx[2] + pad, bx[1] - pad, bx[3] + pad)
    core = prep(face.buffer(-1e-6 * (1.0 + abs(A))))
    out = []
    for j in candidates:
        for w, Bs, Cs, _, _ in sample_curve_runs(j, A, R, box, max_arc=max_arc):
            if len(Bs) >= 2 and core.intersects(shapely.LineString(np.c_[Bs, Cs])):
                out.append(j)
                break
    return out


def _seed_face(faces, seed):
    import shapely

    hits = [f for f in faces if f.contains(shapely.Point(seed))]
    if not hits:
        return None
    return min(hits, key=lambda f: f.area)


def stable_region_boundary(
    A: float,
    R: float,
    bbox=None,
    max_arc: float | None = None,
    seed=None,
    tiny: float = 1e-4,
    all_faces: bool = False,
    max_rounds: int = 12,
) -> RegionResult:
    """Boundary loop, tags and area of the stable region containing the seed.

    ``tiny`` is the relative arc length (times A, or the box size when A <= 0)
    below which a curve is reported under ``dropped_tags`` rather than
    ``boundary_tags``. With ``all_faces`` the other stable faces of the
    arrangement (disconnected stable islands) are collected as well.
    """
    if seed is None:
        seed = find_stable_seed(A, R)
    box = tuple(bbox) if bbox is not None else default_box(A, R)
    js = _initial_curves(A, R, box)
    for _ in range(max_rounds):
        diag = math.hypot(box[1] - box[0], box[3] - box[2])
        arc = max_arc if max_arc is not None else diag / 2000.0
        pieces = build_pieces(A, R, box, js, arc)
        faces = _faces(pieces, box)
        face = _seed_face(faces, seed)
        if face is None:
            raise OpenLoop("seed does not lie in a closed face of the arrangement")
        fx0, fy0, fx1, fy1 = face.bounds
        eps = 1e-9 * diag
        if fx0 <= box[0] + eps or fx1 >= box[1] - eps or fy0 <= box[2] + eps or fy1 >= box[3] - eps:
            box = _grow(box)
            continue
        ring = np.asarray(face.exterior.coords)
        M = float(np.max(np.abs(ring[:, 0]) + np.abs(ring[:, 1])))
        J = curve_bound(M, R)
        for j in exact_transitions(A, R, J):
            js |= {j, j + 1}
        cand = [j for j in range(1, J + 1) if j not in js]
        new = _intruders(cand, A, R, face, arc) if cand else []
        if new:
            js |= set(new)
            continue
        break
    else:
        raise OpenLoop("boundary walk did not settle")
    seg = _segment_table(pieces)
    ring = np.asarray(face.exterior.coords)
    arcs = _tag_ring(ring, pieces, seg)
    size = A if A > 0 else max(box[1] - box[0], box[3] - box[2]) / 4.4
    lengths: dict = {}
    for a in arcs:
        lengths[a.tag] = lengths.get(a.tag, 0.0) + a.length
    tags = sorted(t for t, L in lengths.items() if L > tiny * size)
    dropped = sorted(t for t, L in lengths.items() if L <= tiny * size)
    others = []
    if all_faces:
        for f in faces:
            if f is face or f.area <= 0:
                continue
            rp = f.representative_point()
            try:
                state = stability(DdeParams(A, rp.x, rp.y, R))
            except NonConvergence:
                continue
            if state == "stable":
                others.append(f)
    area = float(face.area)
    return RegionResult(
        A=A,
        R=R,
        boundary=arcs,
        area=area,
        area_ratio=_ratio(area, A),
        boundary_tags=tags,
        loop=ring,
        method="walk",
        box=tuple(box),
        curves=sorted(js),
        dropped_tags=dropped,
        other_stable=others,
        polygon=face,
    )


# --------------------------------------------------------------------------
# raster


@dataclass
class RegionRaster:
    A: float
    R: float
    bbox: tuple
    resolution: int
    cells: np.ndarray = field(repr=False)  # [row (C), col (B)]; -1 where not explored
    refined_boundary_cells: list = field(repr=False)
    area: float
    area_ratio: float
    spot_checks: int = 0
    spot_check_failures: int = 0
    inconsistent_edges: int = 0
    curves: list = field(default_factory=list)

    def centers(self):
        b0, b1, c0, c1 = self.bbox
        n = self.resolution
        db, dc = (b1 - b0) / n, (c1 - c0) / n
        return b0 + (np.arange(n) + 0.5) * db, c0 + (np.arange(n) + 0.5) * dc


def _crossing_jumps(pieces, A, R):
    """Segment table plus the count change when each segment is crossed.

    Returns (x0, y0, x1, y1, jB, jC): jB is the change in the number of
    unstable roots when the segment is crossed moving in +B, jC for +C.
    The sign comes from the gradient of Re(lambda) for the root sitting on
    the curve, compared against the segment's left normal.
    """
    x0, y0, x1, y1, pid, p0, p1 = _segment_table(pieces)
    kind = np.array([pieces[i].kind for i in range(len(pieces))])[pid]
    jj = np.array([pieces[i].j for i in range(len(pieces))])[pid]
    bm, cm = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    om = 0.5 * (p0 + p1)
    om = np.where(kind == "delta", jj * math.pi / (1.0 - R), om)
    lam = 1j * om
    eB, eC = np.exp(-lam), np.exp(-lam * R)
    fp = 1.0 - bm * eB - cm * R * eC
    with np.errstate(divide="ignore", invalid="ignore"):
        gB = np.real(-eB / fp)
        gC = np.real(-eC / fp)
    mag = np.where(kind == "lambda0", 1.0, 2.0)
    real0 = kind == "lambda0"
    fp0 = 1.0 - bm - cm * R
    gB = np.where(real0, -1.0 / fp0, gB)
    gC = np.where(real0, -1.0 / fp0, gC)
    nx, ny = -(y1 - y0), x1 - x0  # left normal
    s = np.sign(gB * nx + gC * ny)
    jB = (mag * s * np.sign(nx)).astype(int)
    jC = (mag * s * np.sign(ny)).astype(int)
    return x0, y0, x1, y1, jB, jC


def _grid_jumps(seg, box, n):
    x0, y0, x1, y1, jB, jC = seg
    b0, b1, c0, c1 = box
    db, dc = (b1 - b0) / n, (c1 - c0) / n
    bf, cf = b0 + 0.5 * db, c0 + 0.5 * dc
    jh = np.zeros((n, max(n - 1, 1)), dtype=int)
    jv = np.zeros((max(n - 1, 1), n), dtype=int)

    def scatter(u0, v0, u1, v1, jump, v_first, dv, u_first, du, target, rows_are_v):
        vmin, vmax = np.minimum(v0, v1), np.maximum(v0, v1)
        lo = np.ceil((vmin - v_first) / dv).astype(np.int64)
        hi = np.ceil((vmax - v_first) / dv).astype(np.int64) - 1
        lo, hi = np.maximum(lo, 0), np.minimum(hi, n - 1)
        cnt = np.maximum(hi - lo + 1, 0)
        if cnt.sum() == 0:
            return
        idx = np.repeat(np.arange(len(u0)), cnt)
        off = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        line = lo[idx] + off
        v = v_first + line * dv
        us = u0[idx] + (v - v0[idx]) * (u1[idx] - u0[idx]) / (v1[idx] - v0[idx])
        k = np.ceil((us - u_first) / du).astype(np.int64) - 1
        ok = (k >= 0) & (k <= n - 2)
        if rows_are_v:
            np.add.at(target, (line[ok], k[ok]), jump[idx][ok])
        else:
            np.add.at(target, (k[ok], line[ok]), jump[idx][ok])

    # horizontal edges lie on rows C = c_l; crossings found by segments spanning c_l
    scatter(x0, y0, x1, y1, jB, cf, dc, bf, db, jh, True)
    # vertical edges lie on columns B = b_k
    scatter(y0, x0, y1, x1, jC, bf, db, cf, dc, jv, False)
    return jh, jv


def _path_counts(start, start_count, pts, seg):
    """Counts at ``pts`` reached from ``start`` by a horizontal then vertical leg."""
    x0, y0, x1, y1, jB, jC = seg
    sx, sy = start
    px, py = pts[:, 0][:, None], pts[:, 1][:, None]
    counts = np.full(len(pts), start_count, dtype=int)
    if len(x0) == 0:
        return counts
    with np.errstate(divide="ignore", invalid="ignore"):
        span = (np.minimum(y0, y1) <= sy) & (sy < np.maximum(y0, y1))
        xs = x0 + (sy - y0) * (x1 - x0) / (y1 - y0)
        right = span & (xs > sx)
        left = span & (xs <= sx)
        h = (right & (xs <= px)) * jB - (left & (xs > px)) * jB
        spanv = (np.minimum(x0, x1) <= px) & (px < np.maximum(x0, x1))
        ys = y0 + (px - x0) * (y1 - y0) / (x1 - x0)
        up = spanv & (ys > sy) & (ys <= py)
        down = spanv & (ys <= sy) & (ys > py)
        v = up * jC - down * jC
    return counts + h.sum(axis=1) + v.sum(axis=1)


def _quad_fraction(S, i0, j0, size, depth, refine):
    """Stable fraction of a lattice square by recursive quadrisection."""
    h = size // 2
    pts = (S[i0, j0], S[i0 + size, j0], S[i0, j0 + size], S[i0 + size, j0 + size], S[i0 + h, j0 + h])
    if all(pts):
        return 1.0
    if not any(pts):
        return 0.0
    if depth == refine:
        return 0.5
    return 0.25 * sum(
        _quad_fraction(S, i0 + a, j0 + b, h, depth + 1, refine) for a in (0, h) for b in (0, h)
    )


def stable_region_raster(
    A: float,
    R: float,
    bbox=None,
    resolution: int = 400,
    refine: int = 4,
    seed=None,
    spot_checks: int = 6,
    tighten: bool = True,
    max_rounds: int = 12,
) -> RegionRaster:
    """Cell classification of the stable region by count propagation.

    The seed's count (zero) is carried cell to cell; a cell joins the stable
    set when the edge to a stable neighbour crosses no net boundary. Cells
    touched by a curve are quadrisected ``refine`` times using corner and
    centre counts; undecided leaves count half.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    if seed is None:
        seed = find_stable_seed(A, R)
    box = tuple(bbox) if bbox is not None else default_box(A, R)
    n = int(resolution)
    js = _initial_curves(A, R, box)
    tightened = not tighten
    for _ in range(max_rounds):
        b0, b1, c0, c1 = box
        db, dc = (b1 - b0) / n, (c1 - c0) / n
        arc = 0.5 * min(db, dc)
        pieces = build_pieces(A, R, box, js, arc)
        seg = _crossing_jumps(pieces, A, R)
        jh, jv = _grid_jumps(seg, box, n)
        bc = b0 + (np.arange(n) + 0.5) * db
        cc = c0 + (np.arange(n) + 0.5) * dc
        # seed cell: first centre near the seed that the propagation marks stable
        ks = min(max(int((seed[0] - b0) / db), 0), n - 1)
        ls = min(max(int((seed[1] - c0) / dc), 0), n - 1)
        near = [(ls + a, ks + b) for a in (0, -1, 1, -2, 2) for b in (0, -1, 1, -2, 2)
                if 0 <= ls + a < n and 0 <= ks + b < n]
        pts = np.array([[bc[k], cc[l]] for l, k in near])
        cnt = _path_counts(seed, 0, pts, seg)
        stable_near = [near[i] for i in range(len(near)) if cnt[i] == 0]
        if not stable_near:
            raise EmptyRegion("no stable cell centre near the seed; increase the resolution")
        l_seed, k_seed = stable_near[0]
        # graph of zero-jump edges
        ids = np.arange(n * n).reshape(n, n)
        rows, cols = [], []
        zh = jh[:, : n - 1] == 0
        rows.append(ids[:, :-1][zh]); cols.append(ids[:, 1:][zh])
        zv = jv[: n - 1, :] == 0
        rows.append(ids[:-1, :][zv]); cols.append(ids[1:, :][zv])
        r = np.concatenate(rows); c = np.concatenate(cols)
        g = coo_matrix((np.ones(len(r)), (r, c)), shape=(n * n, n * n))
        _, labels = connected_components(g, directed=False)
        comp = (labels == labels[ids[l_seed, k_seed]]).reshape(n, n)
        if comp[0, :].any() or comp[-1, :].any() or comp[:, 0].any() or comp[:, -1].any():
            box = _grow(box)
            continue
        # counts of cells bordering the stable set
        cells = np.full((n, n), -1, dtype=int)
        cells[comp] = 0
        incons = 0
        for (a, b), jump, sl_a, sl_b in (
            ((0, 1), jh[:, : n - 1], (slice(None), slice(0, n - 1)), (slice(None), slice(1, n))),
            ((1, 0), jv[: n - 1, :], (slice(0, n - 1), slice(None)), (slice(1, n), slice(None))),
        ):
            ca, cb = comp[sl_a], comp[sl_b]
            # stable -> neighbour
            m = ca & ~cb
            tgt = cells[sl_b]
            tgt[m] = jump[m]
            m2 = cb & ~ca
            tgt2 = cells[sl_a]
            tgt2[m2] = -jump[m2]
            incons += int(np.count_nonzero(ca & cb & (jump != 0)))
        explored = cells >= 0
        if (cells[explored & ~comp] <= 0).any():
            incons += int(np.count_nonzero(cells[explored & ~comp] <= 0))
        # curve cutoff from the explored diamond
        L, K = np.nonzero(explored)
        M = float(np.max(np.abs(bc[K]) + 0.5 * db + np.abs(cc[L]) + 0.5 * dc))
        J = curve_bound(M, R)
        for j in exact_transitions(A, R, J):
            js |= {j, j + 1}
        cand = [j for j in range(1, J + 1) if j not in js]
        grown = explored.copy()
        grown[1:, :] |= explored[:-1, :]; grown[:-1, :] |= explored[1:, :]
        grown[:, 1:] |= explored[:, :-1]; grown[:, :-1] |= explored[:, 1:]
        ebox = (bc[K.min()] - db, bc[K.max()] + db, cc[L.min()] - dc, cc[L.max()] + dc)
        new = []
        for j in cand:
            for w, Bs, Cs, _, _ in sample_curve_runs(j, A, R, ebox, max_arc=arc):
                kk = np.floor((Bs - b0) / db).astype(np.int64)
                ll = np.floor((Cs - c0) / dc).astype(np.int64)
                ok = (kk >= 0) & (kk < n) & (ll >= 0) & (ll < n)
                if grown[ll[ok], kk[ok]].any():
                    new.append(j)
                    break
        if new:
            js |= set(new)
            continue
        if not tightened:
            tightened = True
            mb, mc = 4 * db, 4 * dc
            box = (bc[K.min()] - mb, bc[K.max()] + mb, cc[L.min()] - mc, cc[L.max()] + mc)
            continue
        break
    else:
        raise NonConvergence("raster curve selection did not settle")

    # quadrisection of explored cells touched by a segment
    x0, y0, x1, y1, jB, jC = seg
    k_lo = np.floor((np.minimum(x0, x1) - b0) / db).astype(np.int64)
    k_hi = np.floor((np.maximum(x0, x1) - b0) / db).astype(np.int64)
    l_lo = np.floor((np.minimum(y0, y1) - c0) / dc).astype(np.int64)
    l_hi = np.floor((np.maximum(y0, y1) - c0) / dc).astype(np.int64)
    bucket: dict = {}
    for s in np.nonzero((k_hi >= 0) & (k_lo < n) & (l_hi >= 0) & (l_lo < n))[0]:
        for l in range(max(l_lo[s], 0), min(l_hi[s], n - 1) + 1):
            for k in range(max(k_lo[s], 0), min(k_hi[s], n - 1) + 1):
                if explored[l, k]:
                    bucket.setdefault((l, k), []).append(s)
    m = 2 ** (refine + 1)
    frac = np.linspace(-0.5, 0.5, m + 1)
    fb, fc = np.meshgrid(frac * db, frac * dc, indexing="ij")
    area_cells = float(np.count_nonzero(comp))
    refined = []
    for (l, k), sl in sorted(bucket.items()):
        sl = np.array(sl)
        sub = tuple(a[sl] for a in seg)
        centre = (bc[k], cc[l])
        pts = np.c_[(centre[0] + fb).ravel(), (centre[1] + fc).ravel()]
        S = (_path_counts(centre, cells[l, k], pts, sub) == 0).reshape(m + 1, m + 1)
        f = _quad_fraction(S, 0, 0, m, 0, refine)
        area_cells += f - (1.0 if comp[l, k] else 0.0)
        refined.append((l, k, f))
    area = area_cells * db * dc

    # oracle spot checks on cells away from every curve
    rng = np.random.default_rng(12345)
    checks = fails = 0
    for mask in (comp, explored & ~comp):
        L, K = np.nonzero(mask)
        free = [(l, k) for l, k in zip(L, K) if (l, k) not in bucket]
        if not free:
            continue
        pick = rng.choice(len(free), size=min(spot_checks, len(free)), replace=False)
        for i in pick:
            l, k = free[int(i)]
            try:
                got = count_unstable(DdeParams(A, bc[k], cc[l], R)).total_unstable
            except (ContourRootError, NonConvergence):
                continue
            checks += 1
            fails += int(got != cells[l, k])
    return RegionRaster(
        A=A,
        R=R,
        bbox=tuple(box),
        resolution=n,
        cells=cells,
        refined_boundary_cells=refined,
        area=area,
        area_ratio=_ratio(area, A),
        spot_checks=checks,
        spot_check_failures=fails,
        inconsistent_edges=incons,
        curves=sorted(js),
    )


# --------------------------------------------------------------------------
# derived quantities


def area_ratio(A: float, R: float, **opts) -> float:
    """Stable area over the minimal diamond area, by the boundary walk.

    Falls back to the raster when the walk cannot close its loop.
    """
    try:
        return stable_region_boundary(A, R, **opts).area_ratio
    except OpenLoop:
        return stable_region_raster(A, R).area_ratio


@dataclass
class AsymptoticResult:
    n: int
    R: float
    A: float
    area_ratio: float
    linear_extension: float
    junction: tuple
    region: RegionResult = field(repr=False)


def lambda0_gamma1_junction(res: RegionResult):
    """Shared endpoint of the Lambda_0 and Gamma_1 arcs of a walked boundary."""
    lam = [a for a in res.boundary if a.kind == "lambda0"]
    g1 = [a for a in res.boundary if a.kind == "gamma" and a.j == 1]
    best, dist = None, math.inf
    for a in lam:
        for pa in ((a.B[0], a.C[0]), (a.B[-1], a.C[-1])):
            for g in g1:
                for pg in ((g.B[0], g.C[0]), (g.B[-1], g.C[-1])):
                    d = math.hypot(pa[0] - pg[0], pa[1] - pg[1])
                    if d < dist:
                        best, dist = pa, d
    return best


def asymptotic_region(n: int, offset: float = 1e-4, **opts) -> AsymptoticResult:
    """Region at R = 1/n - offset and A = A*_{n-1}(R), a proxy for the R -> 1/n limit.

    The linear extension is how far the Lambda_0 edge reaches past the
    diamond corner (0, -A), measured in diamond edge lengths.
    """
    if int(n) != n or n < 2:
        from .errors import InvalidParameters

        raise InvalidParameters(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    R = 1.0 / n - offset
    A = transition_A(n - 1, R)
    res = stable_region_boundary(A, R, **opts)
    J = lambda0_gamma1_junction(res)
    ext = math.hypot(J[0] - 0.0, J[1] + A) / (math.sqrt(2.0) * A) if J is not None else math.nan
    return AsymptoticResult(n, R, A, res.area_ratio, ext, J, res)


# --------------------------------------------------------------------------
# output


def write_region_csv(path, raster: RegionRaster) -> None:
    from .io import write_csv

    bc, cc = raster.centers()
    L, K = np.nonzero(raster.cells >= 0)
    rows = ((bc[k], cc[l], int(raster.cells[l, k])) for l, k in zip(L, K))
    write_csv(path, ("B", "C", "count"), rows)


def write_boundary_csv(path, res: RegionResult) -> None:
    from .io import write_csv

    rows = []
    for arc in res.boundary:
        npts = len(arc.B)
        par = np.linspace(arc.param_start, arc.param_end, npts)
        for t, b, c in zip(par, arc.B, arc.C):
            rows.append((arc.tag, float(t), float(b), float(c)))
    write_csv(path, ("tag", "omega_or_t", "B", "C"), rows)

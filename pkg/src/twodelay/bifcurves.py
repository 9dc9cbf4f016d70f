"""Bifurcation curves of the two-delay equation in the BC-plane.

For fixed (A, R), the set of (B, C) for which ``i*omega`` is a characteristic
root is the parametric curve

    B(omega) = (A sin(omega R) + omega cos(omega R)) / sin(omega (1-R))
    C(omega) = -(A sin(omega) + omega cos(omega)) / sin(omega (1-R))

split by the poles of the denominator into pieces Gamma_j, one per window
((j-1) pi/(1-R), j pi/(1-R)). Both coordinates are affine in A, which the
helpers below exploit: ``B = A*pB + qB`` and ``C = A*pC + qC``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyCurve, InfiniteTransition, InvalidParameters, NotCoprime, SingularOmega

SINGULAR_TOL = 1e-12
STARTING_POINT_R0 = 0.012


@dataclass(frozen=True)
class CurvePoint:
    omega: float
    B: float
    C: float
    dB: float
    dC: float


@dataclass(frozen=True)
class TransitionRecord:
    j: int
    A_star: float
    B_star: float
    C_star: float
    parity: int


@dataclass(frozen=True)
class DegeneracyLine:
    """The line (B - B*) + parity*(C - C*) = 0, i.e. B + parity*C = offset."""

    j: int
    A_star: float
    B_star: float
    C_star: float
    parity: int
    offset: float
    direction: tuple[float, float]

    def residual(self, B, C):
        return (B - self.B_star) + self.parity * (C - self.C_star)


@dataclass(frozen=True)
class StartingPoint:
    A0: float
    B0: float
    C0: float


@dataclass(frozen=True)
class FamilyStructure:
    k: int
    n: int
    j_gap: int
    num_families: int
    classify: Callable[[int], int] = field(repr=False, compare=False)

    def shift_B(self, omega):
        """B(omega + 2n pi) - B(omega) for the curve family shift."""
        s = np.sin((self.n - self.k) * np.asarray(omega) / self.n)
        return 2 * self.n * np.pi * np.cos(self.k * np.asarray(omega) / self.n) / s

    def shift_C(self, omega):
        """C(omega + 2n pi) - C(omega)."""
        s = np.sin((self.n - self.k) * np.asarray(omega) / self.n)
        return -2 * self.n * np.pi * np.cos(np.asarray(omega)) / s


def _check_R(R: float):
    if not (math.isfinite(R) and 0.0 < R < 1.0):
        raise InvalidParameters(f"R must lie strictly inside (0, 1), got {R!r}")


def _check_j(j: int):
    if int(j) != j or j < 1:
        raise InvalidParameters(f"curve index must be a positive integer, got {j!r}")


def curve_domain(j: int, R: float) -> tuple[float, float]:
    _check_j(j)
    _check_R(R)
    w = math.pi / (1.0 - R)
    return ((j - 1) * w, j * w)


def curve_index(omega: float, R: float) -> int:
    """Index j of the curve whose open window contains omega > 0."""
    return int(math.floor(omega * (1.0 - R) / math.pi)) + 1


def curve_coefficients(omega, R: float):
    """Affine-in-A coefficients and their omega-derivatives.

    Returns ``(pB, qB, pC, qC, dpB, dqB, dpC, dqC)`` with B = A pB + qB,
    C = A pC + qC. Vectorized; works for complex omega too (used for
    complex-step second derivatives).
    """
    w = omega
    S = np.sin(w * (1.0 - R))
    dS = (1.0 - R) * np.cos(w * (1.0 - R))
    nums = (
        np.sin(w * R),
        w * np.cos(w * R),
        -np.sin(w),
        -w * np.cos(w),
    )
    dnums = (
        R * np.cos(w * R),
        np.cos(w * R) - w * R * np.sin(w * R),
        -np.cos(w),
        -np.cos(w) + w * np.sin(w),
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = tuple(nv / S for nv in nums)
        ders = tuple((dn * S - nv * dS) / S**2 for nv, dn in zip(nums, dnums))
    return vals + ders


def curve_coefficients_d2(omega, R: float):
    """Second omega-derivatives (d2pB, d2qB, d2pC, d2qC), by complex step."""
    w = np.asarray(omega, dtype=float)
    h = 1e-20 * np.maximum(1.0, np.abs(w))
    ders = curve_coefficients(w + 1j * h, R)[4:]
    return tuple(np.imag(d) / h for d in ders)


def curve_arrays(omega, A: float, R: float):
    """Vectorized (B, C, dB, dC) with no singularity checks."""
    pB, qB, pC, qC, dpB, dqB, dpC, dqC = curve_coefficients(omega, R)
    return A * pB + qB, A * pC + qC, A * dpB + dqB, A * dpC + dqC


def curve_second_derivs(omega, A: float, R: float):
    """(d2B, d2C) by complex-step differentiation of the analytic first derivatives."""
    h = 1e-20 * np.maximum(1.0, np.abs(omega))
    _, _, dB, dC = curve_arrays(np.asarray(omega, dtype=complex) + 1j * h, A, R)
    return np.imag(dB) / h, np.imag(dC) / h


def gamma1_limit(A: float, R: float) -> tuple[float, float]:
    """Endpoint of Gamma_1 as omega -> 0+; it lies on the plane A + B + C = 0."""
    return ((1.0 + R * A) / (1.0 - R), -(A + 1.0) / (1.0 - R))


def bif_point(omega: float, A: float, R: float) -> CurvePoint:
    """Point of the bifurcation curve at frequency omega (omega = 0 gives the limit)."""
    _check_R(R)
    if omega == 0.0:
        B, C = gamma1_limit(A, R)
        return CurvePoint(0.0, B, C, 0.0, 0.0)  # B and C are even in omega
    if abs(math.sin(omega * (1.0 - R))) < SINGULAR_TOL * (1.0 + abs(omega)):
        raise SingularOmega(f"omega={omega!r} is a pole of the curve parametrization")
    B, C, dB, dC = curve_arrays(float(omega), A, R)
    return CurvePoint(float(omega), float(B), float(C), float(dB), float(dC))


def _as_box(bbox) -> tuple[float, float, float, float]:
    if np.isscalar(bbox):
        b = float(bbox)
        return (-b, b, -b, b)
    b = tuple(float(x) for x in bbox)
    if len(b) != 4:
        raise InvalidParameters("bbox must be a half-width or (Bmin, Bmax, Cmin, Cmax)")
    return b


def _refine_curve(lo, hi, A, R, box, max_arc, max_turn, n_initial, max_depth, snap=(None, None)):
    """Adaptive omega grid over the open window (lo, hi).

    A segment is bisected while it may touch the (slightly enlarged) box and
    either its chord exceeds max_arc or the tangent turns by more than
    max_turn across it.
    """
    b0, b1, c0, c1 = box
    pad_b, pad_c = 0.25 * (b1 - b0), 0.25 * (c1 - c0)
    gb0, gb1, gc0, gc1 = b0 - pad_b, b1 + pad_b, c0 - pad_c, c1 + pad_c
    span = hi - lo
    # Keep a standoff from the poles so every sample is well defined.
    edge = max(1e-9 * span, SINGULAR_TOL * 10 * (1.0 + hi))
    # A removable pole (A exactly at a transition) is cut out more widely:
    # rounding in the 0/0 quotient spoils samples very close to it.
    e_lo = 1e-6 * max(lo, 1.0) if snap[0] is not None else edge
    e_hi = 1e-6 * hi if snap[1] is not None else edge
    t = np.linspace(0.0, 1.0, n_initial + 1)
    # Cluster samples toward the poles where the curve runs off to infinity.
    t = 0.5 - 0.5 * np.cos(np.pi * t)
    w = lo + e_lo + (span - e_lo - e_hi) * t
    if lo == 0.0:
        w[0] = 0.0
    min_dw = 1e-13 * (1.0 + hi)
    for _ in range(max_depth):
        B, C, dB, dC = curve_arrays(w, A, R)
        if lo == 0.0:
            B[0], C[0] = gamma1_limit(A, R)
            dB[0] = dC[0] = 0.0
        near = ~(
            (np.maximum(B[:-1], B[1:]) < gb0)
            | (np.minimum(B[:-1], B[1:]) > gb1)
            | (np.maximum(C[:-1], C[1:]) < gc0)
            | (np.minimum(C[:-1], C[1:]) > gc1)
        )
        chord = np.hypot(np.diff(B), np.diff(C))
        ang = np.arctan2(dC, dB)
        turn = np.abs(np.angle(np.exp(1j * (ang[1:] - ang[:-1]))))
        # an in-box point next to a far-off one also counts as too long
        bad = near & ((chord > max_arc) | ((turn > max_turn) & (chord > 1e-3 * max_arc)))
        bad &= np.diff(w) > min_dw
        if not bad.any():
            break
        mid = 0.5 * (w[:-1][bad] + w[1:][bad])
        w = np.sort(np.concatenate([w, mid]))
    B, C, dB, dC = curve_arrays(w, A, R)
    if lo == 0.0:
        B[0], C[0] = gamma1_limit(A, R)
        dB[0] = dC[0] = 0.0
    if snap[0] is not None:
        w, B, C = np.r_[lo, w], np.r_[snap[0][0], B], np.r_[snap[0][1], C]
        dB, dC = np.r_[dB[0], dB], np.r_[dC[0], dC]
    if snap[1] is not None:
        w, B, C = np.r_[w, hi], np.r_[B, snap[1][0]], np.r_[C, snap[1][1]]
        dB, dC = np.r_[dB, dB[-1]], np.r_[dC, dC[-1]]
    return w, B, C, dB, dC


def sample_curve_runs(
    j: int,
    A: float,
    R: float,
    bbox=1e3,
    max_arc: float | None = None,
    max_turn: float = 0.1,
    n_initial: int = 256,
    max_depth: int = 30,
    snap=(None, None),
):
    """Sample Gamma_j and split it into contiguous runs that touch the box.

    Each run is a tuple of arrays ``(omega, B, C, dB, dC)`` and includes one
    point beyond the box at each end (when available) so that polylines cross
    the box edge rather than stop short of it. ``snap`` optionally gives the
    finite limit points ``(B, C)`` at the left/right window ends; use it when
    A sits exactly at the corresponding transition and the pole cancels.
    """
    lo, hi = curve_domain(j, R)
    box = _as_box(bbox)
    if max_arc is None:
        max_arc = math.hypot(box[1] - box[0], box[3] - box[2]) / 2000.0
    w, B, C, dB, dC = _refine_curve(lo, hi, A, R, box, max_arc, max_turn, n_initial, max_depth, snap)
    inside = (B >= box[0]) & (B <= box[1]) & (C >= box[2]) & (C <= box[3])
    if not inside.any():
        return []
    keep = inside.copy()
    keep[:-1] |= inside[1:]
    keep[1:] |= inside[:-1]
    runs = []
    idx = np.nonzero(keep)[0]
    splits = np.nonzero(np.diff(idx) > 1)[0] + 1
    for part in np.split(idx, splits):
        runs.append((w[part], B[part], C[part], dB[part], dC[part]))
    return runs


def sample_curve(j: int, A: float, R: float, bbox=1e3, **opts) -> list[CurvePoint]:
    """Adaptively sampled points of Gamma_j inside bbox, in increasing omega.

    ``bbox`` is a half-width or ``(Bmin, Bmax, Cmin, Cmax)``. Options:
    ``max_arc`` (default bbox diagonal / 2000), ``max_turn`` (radians),
    ``n_initial`` and ``max_depth``.
    """
    _check_j(j)
    box = _as_box(bbox)
    runs = sample_curve_runs(j, A, R, box, **opts)
    pts = []
    for w, B, C, dB, dC in runs:
        inside = (B >= box[0]) & (B <= box[1]) & (C >= box[2]) & (C <= box[3])
        for k in np.nonzero(inside)[0]:
            pts.append(CurvePoint(float(w[k]), float(B[k]), float(C[k]), float(dB[k]), float(dC[k])))
    if not pts:
        raise EmptyCurve(f"Gamma_{j} lies entirely outside the box {box}")
    return pts


def _theta(j: int, R: float) -> float:
    return j * R * math.pi / (1.0 - R)


def transition_A(j: int, R: float) -> float:
    """A*_j = -(j pi/(1-R)) cot(j R pi/(1-R)); +inf where the cotangent blows up.

    The curves approach that singularity from below in R, where A*_j -> +inf.
    """
    _check_j(j)
    _check_R(R)
    th = _theta(j, R)
    s = math.sin(th)
    if abs(s) < SINGULAR_TOL:
        return math.inf
    return -(j * math.pi / (1.0 - R)) * math.cos(th) / s


def transition_point_direct(j: int, R: float) -> tuple[float, float]:
    """(B*_j, C*_j) from the cosecant form; valid wherever A*_j is finite."""
    th = _theta(j, R)
    s = math.sin(th)
    if abs(s) < SINGULAR_TOL:
        raise InfiniteTransition(f"A*_{j} is infinite at R={R}")
    sign = -1.0 if j % 2 else 1.0
    d = (1.0 - R) ** 2
    B = sign * ((1.0 - R) * math.cos(th) - j * R * math.pi / s) / d
    C = (j * math.pi / s - (1.0 - R) * math.cos(th)) / d
    return B, C


def transition_point_alternate(j: int, R: float) -> tuple[float, float]:
    """(B*_j, C*_j) expressed through A*_j; indeterminate where cos(theta) = 0."""
    th = _theta(j, R)
    a = transition_A(j, R)
    if not math.isfinite(a):
        raise InfiniteTransition(f"A*_{j} is infinite at R={R}")
    c = math.cos(th)
    sign = -1.0 if j % 2 else 1.0
    B = sign * (c / (1.0 - R) + R * a / ((1.0 - R) * c))
    C = -a / ((1.0 - R) * c) - c / (1.0 - R)
    return B, C


def transition_point(j: int, R: float) -> TransitionRecord:
    """Transition record (j, A*_j, B*_j, C*_j, parity).

    The A*-based form is used unless cos(theta) is tiny, where it is 0/0 and the
    cosecant form takes over.
    """
    _check_j(j)
    _check_R(R)
    a = transition_A(j, R)
    if not math.isfinite(a):
        raise InfiniteTransition(f"A*_{j} is infinite at R={R}")
    if abs(math.cos(_theta(j, R))) < 1e-6:
        B, C = transition_point_direct(j, R)
    else:
        B, C = transition_point_alternate(j, R)
    return TransitionRecord(j, a, B, C, -1 if j % 2 else 1)


def degeneracy_line(j: int, R: float) -> DegeneracyLine:
    t = transition_point(j, R)
    return DegeneracyLine(
        j=j,
        A_star=t.A_star,
        B_star=t.B_star,
        C_star=t.C_star,
        parity=t.parity,
        offset=t.B_star + t.parity * t.C_star,
        direction=(1.0, float(-t.parity)),
    )


def starting_point(R: float) -> StartingPoint:
    """Lowest A at which a stable (B, C) exists, and where it sits."""
    _check_R(R)
    if R <= STARTING_POINT_R0:
        warnings.warn(f"starting-point formula is only established for R > {STARTING_POINT_R0}", stacklevel=2)
    return StartingPoint(-(R + 1.0) / R, R / (R - 1.0), 1.0 / (R * (1.0 - R)))


def family_structure(k: int, n: int) -> FamilyStructure:
    """Family classification of the curves for R = k/n."""
    if int(k) != k or int(n) != n or not 0 < k < n:
        raise InvalidParameters(f"need integers 0 < k < n, got k={k!r}, n={n!r}")
    k, n = int(k), int(n)
    if math.gcd(k, n) != 1:
        raise NotCoprime(f"k={k} and n={n} share a factor")
    gap = n - k
    m = 2 * gap

    def classify(i: int) -> int:
        _check_j(i)
        return (i - 1) % m + 1

    return FamilyStructure(k=k, n=n, j_gap=gap, num_families=m, classify=classify)


def write_curve_csv(path, curves) -> None:
    """Write ``{j: [CurvePoint, ...]}`` as rows (j, omega, B, C, dB, dC)."""
    from .io import write_csv

    rows = []
    for j in sorted(curves):
        for pt in curves[j]:
            rows.append((j, pt.omega, pt.B, pt.C, pt.dB, pt.dC))
    write_csv(path, ("j", "omega", "B", "C", "dB", "dC"), rows)

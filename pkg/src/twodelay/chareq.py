"""Characteristic equation of y'(t) + A y(t) + B y(t-1) + C y(t-R) = 0.

Roots of ``f(lam) = lam + A + B exp(-lam) + C exp(-lam R)`` govern stability.
This module evaluates ``f``, counts roots in the right half-plane with the
argument principle, locates them with grid-seeded Newton iteration, and
classifies parameter points as stable, unstable or marginal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContourRootError,
    CountMismatch,
    InvalidParameters,
    MarginalStability,
    NonConvergence,
)

WINDING_DEPTH_CAP = 40
SEED_GRID_START = 32
SEED_GRID_MAX = 256


@dataclass(frozen=True)
class DdeParams:
    """Coefficients (A, B, C) and delay ratio R of the two-delay equation."""

    A: float
    B: float
    C: float
    R: float

    def __post_init__(self):
        for name in ("A", "B", "C", "R"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameters(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not 0.0 < self.R < 1.0:
            raise InvalidParameters(f"R must lie strictly inside (0, 1), got {self.R!r}")

    @property
    def sigma_max(self) -> float:
        # Any root with Re >= 0 obeys |lam| <= |A| + |B| + |C|.
        return abs(self.A) + abs(self.B) + abs(self.C) + 1.0

    @property
    def scale(self) -> float:
        return 1.0 + abs(self.A) + abs(self.B) + abs(self.C)

    def replace(self, **changes) -> "DdeParams":
        values = dict(A=self.A, B=self.B, C=self.C, R=self.R)
        values.update(changes)
        return DdeParams(**values)


@dataclass(frozen=True)
class ComplexRoot:
    re: float
    im: float
    residual: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def multiplicity_in_count(self) -> int:
        """Roots off the real axis stand for a conjugate pair."""
        return 1 if self.im == 0.0 else 2


@dataclass(frozen=True)
class RootCount:
    total_unstable: int
    real_unstable: int
    contour_used: tuple[float, float, float, float]  # (re_lo, re_hi, im_lo, im_hi)


def eval_char(lam, p: DdeParams):
    """Return ``lam + A + B e^{-lam} + C e^{-lam R}``; accepts scalars or arrays."""
    return lam + p.A + p.B * np.exp(-lam) + p.C * np.exp(-lam * p.R)


def eval_char_deriv(lam, p: DdeParams):
    return 1.0 - p.B * np.exp(-lam) - p.C * p.R * np.exp(-lam * p.R)


def axis_standoff(p: DdeParams) -> float:
    return 1e-8 * (1.0 + p.sigma_max)


def root_tolerance(p: DdeParams) -> float:
    return 1e-9 * p.scale


def _edge_phase_change(z0: complex, z1: complex, p: DdeParams, step: float) -> float:
    """Accumulated arg f along the straight edge z0 -> z1.

    Each sub-interval is accepted once the principal phase increment is small
    and agrees with a trapezoid estimate of Im(int f'/f dz); otherwise it is
    bisected. The agreement test is what rules out hidden full turns.
    """
    length = abs(z1 - z0)
    n0 = max(8, int(math.ceil(length / step)))
    t = np.linspace(0.0, 1.0, n0 + 1)
    z = z0 + (z1 - z0) * t
    f = eval_char(z, p)
    zero_tol = 1e-13 * p.scale
    if np.min(np.abs(f)) < zero_tol:
        raise ContourRootError("characteristic function vanishes on the contour")
    g = eval_char_deriv(z, p) / f
    za, zb, fa, fb, ga, gb = z[:-1], z[1:], f[:-1], f[1:], g[:-1], g[1:]
    total = 0.0
    for _ in range(WINDING_DEPTH_CAP + 1):
        darg = np.angle(fb / fa)
        trap = np.imag(0.5 * (ga + gb) * (zb - za))
        ok = (np.abs(darg) < 0.75) & (np.abs(darg - trap) < 0.05)
        total += float(np.sum(darg[ok]))
        bad = ~ok
        if not bad.any():
            return total
        za, zb, fa, fb, ga, gb = za[bad], zb[bad], fa[bad], fb[bad], ga[bad], gb[bad]
        zm = 0.5 * (za + zb)
        fm = eval_char(zm, p)
        if np.min(np.abs(fm)) < zero_tol or np.min(np.abs(zb - za)) < 1e-15 * p.scale:
            raise ContourRootError("root within tolerance of the contour")
        gm = eval_char_deriv(zm, p) / fm
        za, zb = np.concatenate([za, zm]), np.concatenate([zm, zb])
        fa, fb = np.concatenate([fa, fm]), np.concatenate([fm, fb])
        ga, gb = np.concatenate([ga, gm]), np.concatenate([gm, gb])
    raise NonConvergence("winding-number bisection exceeded its depth cap")


def winding_number(p: DdeParams, re_lo: float, re_hi: float, im_lo: float, im_hi: float) -> int:
    """Number of zeros of f inside the rectangle, by the argument principle."""
    corners = [
        complex(re_lo, im_lo),
        complex(re_hi, im_lo),
        complex(re_hi, im_hi),
        complex(re_lo, im_hi),
    ]
    total = 0.0
    for k in range(4):
        z0, z1 = corners[k], corners[(k + 1) % 4]
        # Vertical edges see the fast rotation of exp(-lam); horizontal ones do not.
        step = 0.25 if z0.real == z1.real else 1.0
        total += _edge_phase_change(z0, z1, p, step)
    w = total / (2.0 * math.pi)
    n = round(w)
    if abs(w - n) > 0.25:
        raise NonConvergence(f"winding number {w:.3f} is not close to an integer")
    return int(n)


def _real_roots(p: DdeParams, lo: float, hi: float) -> list[float]:
    """Sign-change roots of f on the real segment [lo, hi]."""
    from scipy.optimize import brentq

    x = np.linspace(lo, hi, 4001)
    fx = eval_char(x, p)
    roots = []
    idx = np.nonzero(np.sign(fx[:-1]) * np.sign(fx[1:]) < 0)[0]
    for k in idx:
        roots.append(brentq(lambda s: float(eval_char(s, p)), x[k], x[k + 1], xtol=1e-14))
    return roots


def count_unstable(p: DdeParams, eps: float | None = None) -> RootCount:
    """Count zeros of f with Re > eps via the argument principle."""
    if eps is None:
        eps = axis_standoff(p)
    smax = p.sigma_max
    total = winding_number(p, eps, smax, -smax, smax)
    real = len(_real_roots(p, eps, smax))
    return RootCount(total, real, (eps, smax, -smax, smax))


def stability(p: DdeParams) -> str:
    """Classify p as ``"stable"``, ``"unstable"`` or ``"marginal"``."""
    eps = axis_standoff(p)
    try:
        n_right = count_unstable(p, eps).total_unstable
    except ContourRootError:
        return "marginal"
    if n_right > 0:
        return "unstable"
    try:
        n_strip = count_unstable(p, -eps).total_unstable
    except ContourRootError:
        return "marginal"
    return "marginal" if n_strip > n_right else "stable"


def is_stable(p: DdeParams) -> bool:
    """True iff every root has Re < 0; raises MarginalStability for axis roots."""
    state = stability(p)
    if state == "marginal":
        raise MarginalStability(f"root within {axis_standoff(p):.3g} of the imaginary axis")
    return state == "stable"


def has_positive_real_root(p: DdeParams, with_marginal: bool = False):
    """Whether f has a zero on the positive real axis.

    With ``with_marginal=True`` returns ``(positive, marginal)`` where
    ``marginal`` flags a root at lam = 0 (A + B + C = 0).
    """
    f0 = p.A + p.B + p.C
    marginal = abs(f0) <= 1e-12 * p.scale
    if f0 < 0 and not marginal:
        positive = True
    else:
        lo = axis_standoff(p)
        positive = bool(_real_roots(p, lo, p.sigma_max))
        if not positive:
            # tangential double root: minimum of f touching zero
            x = np.linspace(lo, p.sigma_max, 4001)
            positive = bool(np.min(eval_char(x, p)) < -1e-12 * p.scale)
    return (positive, marginal) if with_marginal else positive


def _newton(z, p: DdeParams, iters: int = 80):
    tol = 1e-14 * p.scale
    active = np.ones(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(iters):
            f = eval_char(z[active], p)
            d = eval_char_deriv(z[active], p)
            step = f / d
            z[active] = z[active] - step
            done = ~np.isfinite(step) | (np.abs(step) < tol)
            idx = np.nonzero(active)[0]
            active[idx[done]] = False
            if not active.any():
                break
    return z


def _cluster(z: np.ndarray, radius: float) -> list[complex]:
    if z.size == 0:
        return []
    order = np.lexsort((z.imag, z.real))
    z = z[order]
    kept: list[complex] = []
    for value in z:
        if all(abs(value - k) > radius for k in kept):
            kept.append(complex(value))
    return kept


def unstable_roots(p: DdeParams, strict: bool = False) -> list[ComplexRoot]:
    """Roots with Re > 0, one per conjugate pair (im >= 0), sorted by descending Re.

    Newton iteration is seeded from a uniform grid over the box that must
    contain every right-half-plane root (|lam + A| <= |B| + |C|). The number
    found is checked against ``count_unstable``; the grid is doubled on a
    mismatch. If the largest grid still disagrees, CountMismatch is raised
    when ``strict`` is set, otherwise the partial list is returned with a
    RuntimeWarning marking it unverified.
    """
    expected = count_unstable(p).total_unstable
    eps = axis_standoff(p)
    radius = 1e-6 * (1.0 + p.sigma_max)
    tol = root_tolerance(p)
    reach = abs(p.B) + abs(p.C)
    re_hi = min(p.sigma_max, max(reach - p.A, 1.0))
    im_hi = min(p.sigma_max, max(reach, 1.0))
    found: list[ComplexRoot] = []
    n = SEED_GRID_START
    while True:
        re_axis = np.linspace(0.0, re_hi, n)
        im_axis = np.linspace(0.0, im_hi, n)
        seeds = (re_axis[None, :] + 1j * im_axis[:, None]).ravel()
        z = _newton(seeds.astype(complex), p)
        good = np.isfinite(z)
        z = z[good]
        res = np.abs(eval_char(z, p))
        z = z[(res <= tol) & (z.real > eps)]
        z = np.where(np.abs(z.imag) <= radius, z.real + 0j, z)
        z = np.where(z.imag < 0, np.conj(z), z)
        roots = _cluster(z, radius)
        found = []
        for r in roots:
            r = complex(_newton(np.array([r]), p, iters=5)[0])
            im = 0.0 if abs(r.imag) <= radius else abs(r.imag)
            found.append(ComplexRoot(r.real, im, float(abs(eval_char(complex(r.real, im), p)))))
        count = sum(r.multiplicity_in_count for r in found)
        if count == expected or n >= SEED_GRID_MAX:
            break
        n *= 2
    found.sort(key=lambda r: (-r.re, r.im))
    if count != expected and strict:
        raise CountMismatch(
            f"Newton search found {count} unstable roots, argument principle says {expected}",
            partial=found,
            expected=expected,
        )
    if count != expected:
        warnings.warn(f"unverified root list: found {count} of {expected} unstable roots", RuntimeWarning, stacklevel=2)
    return found


def rightmost_roots(p: DdeParams, k: int = 3, re_floor: float | None = None) -> list[ComplexRoot]:
    """The ``k`` roots with largest real part (im >= 0), including stable ones.

    Seeds cover the strip ``re_floor <= Re <= reach - A``; the default floor is
    ``-1``. Intended for diagnostics such as decay rates of stable equilibria.
    """
    if re_floor is None:
        re_floor = -1.0
    reach = abs(p.B) + abs(p.C)
    re_hi = max(reach - p.A, re_floor + 1.0)
    im_hi = max(p.sigma_max, 1.0)
    re_axis = np.linspace(re_floor, re_hi, 48)
    im_axis = np.linspace(0.0, im_hi, 256)
    seeds = (re_axis[None, :] + 1j * im_axis[:, None]).ravel()
    z = _newton(seeds.astype(complex), p)
    z = z[np.isfinite(z)]
    z = z[np.abs(eval_char(z, p)) <= root_tolerance(p)]
    z = z[z.real >= re_floor]
    radius = 1e-6 * (1.0 + p.sigma_max)
    z = np.where(z.imag < 0, np.conj(z), z)
    roots = [complex(r) for r in _cluster(z, radius)]
    roots.sort(key=lambda r: -r.real)
    return [
        ComplexRoot(r.real, 0.0 if abs(r.imag) <= radius else r.imag, float(abs(eval_char(r, p))))
        for r in roots[:k]
    ]

"""Method-of-steps RK4 for scalar equations with delays 1 and R.

The linear case is y' = -A y(t) - B y(t-1) - C y(t-R). The platelet model is
P' = -gamma P(t) + beta(P(t-R)) - f beta(P(t-1)) with the Hill-type
production beta(P) = beta0 theta^n P / (theta^n + P^n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .chareq import DdeParams
from .errors import (
    InvalidParameters,
    NoPositiveEquilibrium,
    NotOscillatory,
    Overflow,
    StepTooLarge,
)

OVERFLOW = 1e12


@dataclass(frozen=True)
class PlateletParams:
    gamma: float = 100.0
    beta0: float = 168.6
    hill_n: float = 4.0
    theta: float = 10.0
    f: float = 0.35
    R: float = 1.0 / 3.0

    def __post_init__(self):
        vals = (self.gamma, self.beta0, self.hill_n, self.theta, self.f, self.R)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParameters("platelet parameters must be finite")
        if self.gamma <= 0 or self.beta0 <= 0 or self.theta <= 0:
            raise InvalidParameters("gamma, beta0 and theta must be positive")
        if self.hill_n < 1:
            raise InvalidParameters("hill_n must be >= 1")
        if not 0.0 <= self.f < 1.0:
            raise InvalidParameters("f must lie in [0, 1)")
        if not 0.0 < self.R < 1.0:
            raise InvalidParameters("R must lie in (0, 1)")

    def beta(self, P):
        tn = self.theta ** self.hill_n
        return self.beta0 * tn * P / (tn + np.abs(P) ** self.hill_n)

    def beta_prime(self, P):
        tn = self.theta ** self.hill_n
        pn = np.abs(P) ** self.hill_n
        return self.beta0 * tn * (tn + (1.0 - self.hill_n) * pn) / (tn + pn) ** 2


@dataclass(frozen=True)
class HistorySpec:
    """Initial function on [-1, 0].

    ``constant`` is y = value throughout. ``equilibrium_plus_pulse`` adds
    ``offset`` on the last ``width`` time units before t = 0.
    """

    kind: str = "constant"
    value: float = 0.0
    offset: float = 0.0
    width: float = 0.05

    def __post_init__(self):
        if self.kind not in ("constant", "equilibrium_plus_pulse"):
            raise InvalidParameters(f"unknown history kind {self.kind!r}")
        if not (math.isfinite(self.value) and math.isfinite(self.offset)):
            raise InvalidParameters("history values must be finite")
        if not 0.0 < self.width <= 1.0:
            raise InvalidParameters("pulse width must lie in (0, 1]")

    def __call__(self, t: float) -> float:
        if self.kind == "equilibrium_plus_pulse" and t >= -self.width:
            return self.value + self.offset
        return self.value

    def minimum(self) -> float:
        return min(self.value, self.value + self.offset) if self.kind != "constant" else self.value


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    h: float
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OscillationSummary:
    growth_rate: float
    period: float
    oscillatory: bool
    n_crossings: int
    n_peaks: int
    method: str = "zero-crossings/peak-log-fit"


# --------------------------------------------------------------------------
# step selection


def snap_step(h: float, R: float, max_den: int = 12) -> float:
    """Largest step <= h with 1/h integer, and R/h integer when R = k/n, n <= max_den."""
    if not (h > 0 and math.isfinite(h)):
        raise InvalidParameters("h must be positive")
    N = math.ceil(1.0 / h - 1e-9)
    frac = Fraction(R).limit_denominator(max_den)
    if abs(float(frac) - R) <= 1e-12:
        N = frac.denominator * math.ceil(N / frac.denominator)
    return 1.0 / N


def _check_step(h: float, R: float) -> None:
    if h > min(R, 1.0 - R) / 4.0:
        raise StepTooLarge(f"h={h:g} exceeds min(R, 1-R)/4 = {min(R, 1 - R) / 4:g}")


# --------------------------------------------------------------------------
# core integrator


def _lagrange_weights(u: float):
    """Cubic Lagrange weights for nodes -1, 0, 1, 2 at offset u in [0, 1]."""
    return (
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    )


def _integrate(rhs: Callable, hist: HistorySpec, R: float, t_end: float, h: float,
               y0: float | None = None) -> Trajectory:
    if not t_end > 0:
        raise InvalidParameters("t_end must be positive")
    _check_step(h, R)
    n_steps = int(round(t_end / h))
    y = np.empty(n_steps + 1)
    y[0] = hist(0.0) if y0 is None else y0
    ys = y  # alias used by the closure

    def lag(s: float) -> float:
        if s < 0.0:
            return hist(s)
        u = s / h
        i = math.floor(u)
        r = u - i
        if r < 1e-9 or r > 1.0 - 1e-9:
            return ys[int(round(u))]
        i0 = max(i - 1, 0)
        w = _lagrange_weights(u - i0 - 1)
        return w[0] * ys[i0] + w[1] * ys[i0 + 1] + w[2] * ys[i0 + 2] + w[3] * ys[i0 + 3]

    yn = float(y[0])
    for n in range(n_steps):
        t = n * h
        th = t + 0.5 * h
        t1 = t + h
        k1 = rhs(yn, lag(t - R), lag(t - 1.0))
        lr, l1 = lag(th - R), lag(th - 1.0)
        k2 = rhs(yn + 0.5 * h * k1, lr, l1)
        k3 = rhs(yn + 0.5 * h * k2, lr, l1)
        k4 = rhs(yn + h * k3, lag(t1 - R), lag(t1 - 1.0))
        yn = yn + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not abs(yn) < OVERFLOW:
            raise Overflow(f"|y| exceeded {OVERFLOW:g} at t={t1:g}")
        y[n + 1] = yn
    return Trajectory(np.arange(n_steps + 1) * h, y, h)


def integrate_linear(p: DdeParams, hist: HistorySpec, t_end: float, h: float = 1e-3,
                     snap: bool = True) -> Trajectory:
    """y' = -A y - B y(t-1) - C y(t-R) with history ``hist`` on [-1, 0]."""
    h = snap_step(h, p.R) if snap else h
    A, B, C = p.A, p.B, p.C

    def rhs(y, yR, y1):
        return -A * y - B * y1 - C * yR

    traj = _integrate(rhs, hist, p.R, t_end, h)
    traj.meta.update(model="linear", A=A, B=B, C=C, R=p.R)
    return traj


def integrate_platelet(pp: PlateletParams, hist: HistorySpec | None = None, t_end: float = 5.0,
                       h: float = 1.0 / 2000, snap: bool = True) -> Trajectory:
    """Nonlinear platelet model; default history is constant P_e + 0.5."""
    if hist is None:
        hist = HistorySpec("constant", platelet_equilibrium(pp) + 0.5)
    if hist.minimum() < 0:
        raise InvalidParameters("platelet history must be non-negative")
    h = snap_step(h, pp.R) if snap else h
    g, f = pp.gamma, pp.f
    beta = pp.beta
    if float(pp.hill_n).is_integer():
        # plain float arithmetic is several times faster than numpy scalars here
        b0 = pp.beta0 * pp.theta ** pp.hill_n
        tn = pp.theta ** pp.hill_n
        n = int(pp.hill_n)

        def beta(P):
            return b0 * P / (tn + abs(P) ** n)

    def rhs(y, yR, y1):
        return -g * y + beta(yR) - f * beta(y1)

    traj = _integrate(rhs, hist, pp.R, t_end, h)
    traj.meta.update(model="platelet", **{k: getattr(pp, k) for k in ("gamma", "beta0", "hill_n", "theta", "f", "R")})
    return traj


# --------------------------------------------------------------------------
# equilibrium and linearization


def platelet_equilibrium(pp: PlateletParams) -> float:
    """Positive root of gamma P = (1 - f) beta(P)."""
    ratio = (1.0 - pp.f) * pp.beta0 / pp.gamma - 1.0
    if not ratio > 0:
        raise NoPositiveEquilibrium(f"(1-f) beta0 / gamma = {ratio + 1:g} <= 1")
    P = pp.theta * ratio ** (1.0 / pp.hill_n)
    res = -pp.gamma * P + (1.0 - pp.f) * pp.beta(P)
    if abs(res) > 1e-10 * (1.0 + pp.gamma * P):
        raise NoPositiveEquilibrium(f"equilibrium residual {res:g} too large")
    return float(P)


def linearize_platelet(pp: PlateletParams) -> DdeParams:
    bp = float(pp.beta_prime(platelet_equilibrium(pp)))
    return DdeParams(pp.gamma, pp.f * bp, -bp, pp.R)


# --------------------------------------------------------------------------
# oscillation measurement


def measure_oscillation(traj: Trajectory, baseline: float = 0.0, skip: float = 0.5) -> OscillationSummary:
    """Period from upward zero crossings and growth from a log-peak fit.

    Only the part after ``skip`` (fraction of the run) is used.
    """
    t = np.asarray(traj.times)
    x = np.asarray(traj.values) - baseline
    start = int(len(t) * skip)
    t, x = t[start:], x[start:]
    up = np.nonzero((x[:-1] < 0) & (x[1:] >= 0))[0]
    if len(up) < 3:
        raise NotOscillatory(f"only {len(up)} upward zero crossings")
    tc = t[up] - x[up] * (t[up + 1] - t[up]) / (x[up + 1] - x[up])
    period = float(np.mean(np.diff(tc)))

    a = np.abs(x)
    cand = np.nonzero((a[1:-1] >= a[:-2]) & (a[1:-1] > a[2:]))[0] + 1
    peaks = []
    for k in cand:
        if peaks and t[k] - t[peaks[-1]] < 0.5 * period * 0.5:
            # |x| peaks twice per period; keep the larger of near neighbours
            if a[k] > a[peaks[-1]]:
                peaks[-1] = k
            continue
        peaks.append(k)
    peaks = np.asarray(peaks)
    if len(peaks) >= 2 and np.all(a[peaks] > 0):
        growth = float(np.polyfit(t[peaks], np.log(a[peaks]), 1)[0])
    else:
        growth = math.nan
    return OscillationSummary(growth, period, True, int(len(up)), int(len(peaks)))


def write_trajectory_csv(path, traj: Trajectory) -> None:
    from .io import write_csv

    write_csv(path, ("t", "value"), zip(traj.times.tolist(), traj.values.tolist()))

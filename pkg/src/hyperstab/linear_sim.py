"""First-order upwind simulation of the linear closed loop, optionally delayed.

Nodes ``x_i = i dx``, ``i = 0..n``.  ``delta_plus`` moves right with speed 1,
``delta_minus`` moves left with speed 1; the source couples them through
``-M delta_-/+``.  After each interior update the feedback laws are imposed:

    delta_-(t, L) = kL * delta_+(t, L)
    delta_+(t, 0) = k0 * delta_-(t - lag(t), 0)

with ``lag(t) = zeta(t)`` on the startup phase ``[0, 2 tau)`` and ``tau``
afterwards.  The delayed trace is read from a :class:`DelayBuffer` by linear
interpolation.  Before ``t = 0`` the buffer holds the constant value
``delta_-(0, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    BufferUnderrun,
    CFLViolation,
    CompatibilityViolation,
    DomainViolation,
    NonpositiveEnergy,
)
from .lyapunov import EnergyRecord, LinearSystemParams, weight_arrays
from .weights import Constant, WeightFamily

__all__ = [
    "GridState",
    "FeedbackSpec",
    "DelayBuffer",
    "SimResult",
    "startup_zeta",
    "sine_bump_pair",
    "check_compatibility",
    "step",
    "simulate",
    "fit_growth_rate",
    "record_state",
]


@dataclass
class GridState:
    n_cells: int
    dx: float
    time: float
    delta_plus: np.ndarray
    delta_minus: np.ndarray

    def __post_init__(self):
        self.delta_plus = np.asarray(self.delta_plus, dtype=float)
        self.delta_minus = np.asarray(self.delta_minus, dtype=float)
        if self.n_cells < 4:
            raise ValueError(f"n_cells must be >= 4, got {self.n_cells}")
        if self.delta_plus.shape != (self.n_cells + 1,) or self.delta_minus.shape != (
            self.n_cells + 1,
        ):
            raise ValueError("state arrays must both have n_cells + 1 node values")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    @classmethod
    def from_arrays(cls, delta_plus, delta_minus, length: float, time: float = 0.0):
        n = len(delta_plus) - 1
        return cls(n, length / n, time, delta_plus, delta_minus)

    @classmethod
    def zeros(cls, n_cells: int, length: float):
        z = np.zeros(n_cells + 1)
        return cls(n_cells, length / n_cells, 0.0, z, z.copy())

    @property
    def length(self) -> float:
        return self.dx * self.n_cells

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx


def startup_zeta(t: float, tau: float) -> float:
    """Lag on the startup phase: ``tau * s^2 (3 - 2 s)`` with ``s = t / (2 tau)``.

    ``zeta(0) = 0``, ``zeta(2 tau) = tau``, ``zeta'(2 tau) = 0`` and
    ``zeta(t) <= t`` on ``[0, 2 tau]``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if t < 0 or t > 2.0 * tau * (1.0 + 1e-12):
        raise DomainViolation(f"zeta defined on [0, 2 tau] = [0, {2 * tau}], got t={t}")
    s = min(t / (2.0 * tau), 1.0)
    return tau * s * s * (3.0 - 2.0 * s)


_ZETA_KINDS = {"cubic": startup_zeta}


@dataclass(frozen=True)
class FeedbackSpec:
    k0: float
    kL: float = 1.0
    tau: float = 0.0
    zeta: str | None = None

    def __post_init__(self):
        if not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau!r}")
        if (self.tau > 0) != (self.zeta is not None):
            raise ValueError("a startup-phase zeta is required iff tau > 0")
        if self.zeta is not None and self.zeta not in _ZETA_KINDS:
            raise ValueError(f"unknown zeta {self.zeta!r}; known: {sorted(_ZETA_KINDS)}")

    @classmethod
    def delayed(cls, k0: float, tau: float, kL: float = 1.0):
        if tau == 0:
            return cls(k0, kL)
        return cls(k0, kL, tau, "cubic")

    def lag(self, t: float) -> float:
        if self.tau == 0:
            return 0.0
        if t < 2.0 * self.tau:
            return _ZETA_KINDS[self.zeta](t, self.tau)
        return self.tau


class DelayBuffer:
    """Ring buffer of ``delta_-(t, 0)`` samples on the uniform grid ``j * dt``.

    Holds at least ``span`` time units of history.  Constructed pre-filled on
    ``[-span, 0]`` with ``initial_value``.
    """

    def __init__(self, dt: float, span: float, initial_value: float = 0.0):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.dt = float(dt)
        n_pre = int(math.ceil(span / dt))
        self.capacity = n_pre + 3
        self._vals = np.empty(self.capacity)
        self._first = -n_pre  # grid index of the oldest stored sample
        self._count = 0
        for _ in range(n_pre + 1):
            self._push(initial_value)

    def _push(self, value):
        j = self._first + self._count
        self._vals[j % self.capacity] = value
        if self._count == self.capacity:
            self._first += 1
        else:
            self._count += 1

    @property
    def newest_time(self) -> float:
        return (self._first + self._count - 1) * self.dt

    @property
    def oldest_time(self) -> float:
        return self._first * self.dt

    def append(self, t: float, value: float):
        expect = self.newest_time + self.dt
        if abs(t - expect) > 1e-6 * self.dt:
            raise ValueError(f"samples must be appended every dt: expected t={expect}, got {t}")
        self._push(float(value))

    def lookup(self, t: float) -> float:
        pos = t / self.dt
        lo = self._first
        hi = self._first + self._count - 1
        if pos < lo - 1e-9:
            raise BufferUnderrun(f"t={t} precedes buffered history starting at {lo * self.dt}")
        if pos > hi + 1e-9:
            raise ValueError(f"t={t} is in the future of the buffer (newest {hi * self.dt})")
        pos = min(max(pos, lo), hi)
        j = min(int(math.floor(pos)), hi - 1) if hi > lo else lo
        w = pos - j
        v0 = self._vals[j % self.capacity]
        if w == 0.0:
            return float(v0)
        v1 = self._vals[(j + 1) % self.capacity]
        return float((1.0 - w) * v0 + w * v1)

    def times(self) -> np.ndarray:
        return (self._first + np.arange(self._count)) * self.dt

    def values(self) -> np.ndarray:
        idx = (self._first + np.arange(self._count)) % self.capacity
        return self._vals[idx].copy()


def sine_bump_pair(n_cells: int, length: float, amplitude: float = 1e-2) -> GridState:
    """``(A sin^2(pi x/L), A/2 sin^2(2 pi x/L))``.

    Both components and their first derivatives vanish at ``x = 0`` and
    ``x = L``, so the data is C^1-compatible with every pair of gains.
    """
    x = np.linspace(0.0, length, n_cells + 1)
    dp = amplitude * np.sin(np.pi * x / length) ** 2
    dm = 0.5 * amplitude * np.sin(2.0 * np.pi * x / length) ** 2
    dp[0] = dp[-1] = dm[0] = dm[-1] = 0.0
    return GridState(n_cells, length / n_cells, 0.0, dp, dm)


def check_compatibility(state: GridState, k0: float, kL: float, tol: float = 1e-10):
    r0 = abs(state.delta_plus[0] - k0 * state.delta_minus[0])
    rL = abs(state.delta_minus[-1] - kL * state.delta_plus[-1])
    if r0 > tol or rL > tol:
        raise CompatibilityViolation({"x=0": r0, "x=L": rL})


def step(
    state: GridState,
    sys: LinearSystemParams,
    fb: FeedbackSpec,
    buf: DelayBuffer | None,
    dt: float,
    cfl: float = 1.0,
) -> GridState:
    """Advance one time step of length ``dt``."""
    if cfl > 1.0:
        raise CFLViolation(f"CFL number {cfl} > 1 is unstable for upwinding")
    if dt > cfl * state.dx * (1.0 + 1e-12):
        raise CFLViolation(f"dt={dt} > CFL*dx={cfl * state.dx}")
    new_p = np.empty_like(state.delta_plus)
    new_m = np.empty_like(state.delta_minus)
    kernels.upwind_linear(
        state.delta_plus, state.delta_minus, dt / state.dx, sys.m * dt, new_p, new_m
    )
    t_new = state.time + dt
    n = state.n_cells
    new_m[n] = fb.kL * new_p[n]
    if fb.tau == 0:
        new_p[0] = fb.k0 * new_m[0]
    else:
        if buf is None:
            raise BufferUnderrun("delayed feedback needs a DelayBuffer")
        buf.append(t_new, new_m[0])
        new_p[0] = fb.k0 * buf.lookup(t_new - fb.lag(t_new))
    return GridState(n, state.dx, t_new, new_p, new_m)


@dataclass
class SimResult:
    records: list
    state: GridState
    meta: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def record_state(state: GridState, wp, wm) -> EnergyRecord:
    dp, dm = state.delta_plus, state.delta_minus
    e = float(kernels.weighted_energy(wp, wm, dp, dm, state.dx))
    return EnergyRecord(
        time=state.time,
        energy=e,
        l2_norm=kernels.trapezoid_l2(dp, dm, state.dx),
        sup_norm=float(max(np.max(np.abs(dp)), np.max(np.abs(dm)))),
    )


def simulate(
    sys: LinearSystemParams,
    fb: FeedbackSpec | None = None,
    initial: GridState | None = None,
    t_final: float = 10.0,
    n_cells: int = 400,
    cfl: float = 0.9,
    weights: WeightFamily | None = None,
    shift: float | None = None,
    amplitude: float = 1e-2,
    max_records: int = 1000,
    snapshots: bool = False,
) -> SimResult:
    """Run the closed loop to ``t >= t_final`` and record Lyapunov energies.

    ``weights`` defaults to the constant family (plain L2 energy) and are
    evaluated at ``x - shift`` (``shift`` defaults to ``L``).  Records are
    taken every ``ceil(n_steps / max_records)`` steps and at the last step.
    """
    L = sys.length
    if fb is None:
        fb = FeedbackSpec(sys.k)
    if initial is None:
        initial = sine_bump_pair(n_cells, L, amplitude)
    n_cells = initial.n_cells
    if abs(initial.length - L) > 1e-12 * L:
        raise ValueError("initial state does not live on [0, L]")
    check_compatibility(initial, fb.k0, fb.kL)
    if not 0 < cfl <= 1:
        raise CFLViolation(f"CFL number must be in (0, 1], got {cfl}")

    dx = initial.dx
    dt = cfl * dx
    n_steps = max(1, int(math.ceil(t_final / dt - 1e-9)))
    every = int(math.ceil(n_steps / max_records))
    family = weights if weights is not None else Constant(L)
    shift = L if shift is None else shift
    wp, wm = weight_arrays(family, initial.x, shift)

    buf = DelayBuffer(dt, 2.0 * fb.tau, initial.delta_minus[0]) if fb.tau > 0 else None
    state = GridState(n_cells, dx, 0.0, initial.delta_plus.copy(), initial.delta_minus.copy())
    records = [record_state(state, wp, wm)]
    snaps = [state] if snapshots else []
    for i in range(1, n_steps + 1):
        state = step(state, sys, fb, buf, dt, cfl)
        state.time = i * dt
        if i % every == 0 or i == n_steps:
            records.append(record_state(state, wp, wm))
            if snapshots:
                snaps.append(state)

    meta = {
        "scheme": "first-order upwind, explicit Euler source",
        "backend": kernels.BACKEND,
        "cfl": cfl,
        "dt": dt,
        "n_cells": n_cells,
        "n_steps": n_steps,
        "record_every": every,
        "m": sys.m,
        "length": L,
        "k0": fb.k0,
        "kL": fb.kL,
        "tau": fb.tau,
        "zeta": fb.zeta or "none",
        "prehistory": "constant delta_minus(0,0) on [-2 tau, 0]" if fb.tau > 0 else "none",
        "weights": repr(family),
        "weight_shift": shift,
    }
    return SimResult(records, state, meta, snaps)


def fit_growth_rate(records, window) -> float:
    """Half the least-squares slope of ``log E(t)`` over ``window = (t_lo, t_hi)``."""
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise ValueError("window must satisfy t_lo < t_hi")
    t = np.array([r.time for r in records])
    e = np.array([r.energy for r in records])
    if t_lo < t[0] - 1e-12 or t_hi > t[-1] + 1e-12:
        raise ValueError(f"window {window} outside record span [{t[0]}, {t[-1]}]")
    sel = (t >= t_lo) & (t <= t_hi)
    if sel.sum() < 2:
        raise ValueError("fewer than two records inside the window")
    if np.any(e[sel] <= 0):
        raise NonpositiveEnergy("energy vanishes inside the fit window")
    slope = np.polyfit(t[sel], np.log(e[sel]), 1)[0]
    return 0.5 * float(slope)

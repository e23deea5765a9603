"""Diagonal quasilinear 2x2 balance laws with state-dependent speeds.

    (d+)_t + lam_+(d) (d+)_x = G_+(d),    (d-)_t + lam_-(d) (d-)_x = G_-(d)
    d+(t, 0) = k0 d-(t, 0),               d-(t, L) = kL d+(t, L)

Default closure: ``lam_pm = +/- a (1 + gamma (d+ + d-))``.  Sources:

* ``DissipativeSource(m)``: ``G_pm = -m (d+ + d-) / 2``
* ``CouplingSource(m)``: ``G_+ = -m d-``, ``G_- = -m d+`` (the linear model)
* ``AmplifyingSource(nn)``: ``G_pm = nn d_pm``

The first two satisfy ``|G_pm| <= m (|d+| + |d-|)`` and feed the stability
certificate; the last satisfies ``d_pm G_pm >= nn d_pm^2`` and feeds the
instability certificate.  Which certificate applies is fixed by the source
type, so a model can never carry both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import kernels
from .errors import AdmissibilityViolation, AssumptionViolation, CFLViolation
from .linear_sim import GridState, check_compatibility, record_state, sine_bump_pair
from .lyapunov import (
    CertifiedStable,
    CertifiedUnstable,
    Inconclusive,
    search_hyperbolic_weights,
    weight_arrays,
)
from .weights import Hyperbolic, WeightFamily, WeightParams, half_ratio

__all__ = [
    "DissipativeSource",
    "CouplingSource",
    "AmplifyingSource",
    "QuasilinearModel",
    "AssumptionLog",
    "QLSimResult",
    "model_eval",
    "certify_ql_stability",
    "certify_ql_instability",
    "certify_model",
    "instability_gain_bound",
    "simulate_ql",
]

_REL = 1e-12


@dataclass(frozen=True)
class DissipativeSource:
    m: float

    def __call__(self, dp, dm):
        g = -0.5 * self.m * (dp + dm)
        return g, g.copy()


@dataclass(frozen=True)
class CouplingSource:
    m: float

    def __call__(self, dp, dm):
        return -self.m * dm, -self.m * dp


@dataclass(frozen=True)
class AmplifyingSource:
    nn: float

    def __call__(self, dp, dm):
        return self.nn * dp, self.nn * dm


Source = Union[DissipativeSource, CouplingSource, AmplifyingSource]


@dataclass(frozen=True)
class QuasilinearModel:
    base_speed: float
    speed_slope: float
    source: Source
    c: float
    d: float
    eps0: float
    delta_max: float | None = None

    def __post_init__(self):
        if not self.base_speed > 0:
            raise ValueError("base speed must be positive")
        if not self.d >= self.c > 0:
            raise ValueError(f"need d >= c > 0, got c={self.c}, d={self.d}")
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if self.delta_max is not None:
            lo, hi = self.speed_range(self.delta_max)
            if lo < self.c * (1 - _REL) or hi > self.d * (1 + _REL):
                raise ValueError(
                    f"speeds on the box |delta| <= {self.delta_max} span [{lo}, {hi}],"
                    f" not inside [c, d] = [{self.c}, {self.d}]"
                )

    def speed_range(self, delta_max: float):
        spread = 2.0 * abs(self.speed_slope) * delta_max
        return self.base_speed * (1.0 - spread), self.base_speed * (1.0 + spread)

    @classmethod
    def from_box(cls, a, gamma, source, delta_max, eps0):
        """Derive ``c``, ``d`` as the speed extremes over ``|delta_pm| <= delta_max``."""
        spread = 2.0 * abs(gamma) * delta_max
        c = a * (1.0 - spread)
        if not c > 0:
            raise ValueError(f"box too large: c = a (1 - 2|gamma| delta_max) = {c} <= 0")
        return cls(a, gamma, source, c, a * (1.0 + spread), eps0, delta_max)


def model_eval(model: QuasilinearModel, delta_plus, delta_minus):
    """``(lam_+, lam_-, G_+, G_-)``; raises when speeds leave ``[c, d]``."""
    dp = np.asarray(delta_plus, dtype=float)
    dm = np.asarray(delta_minus, dtype=float)
    lp = model.base_speed * (1.0 + model.speed_slope * (dp + dm))
    lm = -lp
    lo, hi = float(np.min(lp)), float(np.max(lp))
    if lo < model.c * (1 - _REL) or hi > model.d * (1 + _REL):
        raise AdmissibilityViolation(
            f"speeds [{lo}, {hi}] leave [c, d] = [{model.c}, {model.d}]"
        )
    gp, gm = model.source(dp, dm)
    return lp, lm, gp, gm


# --- certificates -------------------------------------------------------------


def _ql_source_term(c, psi, ups):
    s = np.sqrt(ups)
    return 0.5 * c * psi * (1.0 / s - s)


def _half_ratio_arr(psi, ups, length):
    z = psi * length
    s = np.sqrt(ups) * (1.0 + 1.0 / np.cosh(z))
    t = np.tanh(z)
    return (s - t) / (s + t)


def certify_ql_stability(c, d, eps0, m, length, k0, kL):
    """Hyperbolic-weight certificate for the dissipative quasilinear loop.

    Requires ``(2 eps0 + 6 M) L < c`` and finds ``(psi, upsilon)`` with
    ``3M + eps0 <= c/2 psi (1/s - s)`` and ``k_i^2 <= (c/d) h_+(L/2)/h_-(L/2)``;
    the energy then decays at rate ``c psi s``.
    """
    if not d >= c > 0:
        raise ValueError("need d >= c > 0")
    lhs = (2.0 * eps0 + 6.0 * m) * length
    if not lhs < c:
        return Inconclusive(f"(2 eps0 + 6 M) L = {lhs:g} >= c = {c:g}", "ql-stable")
    need = 3.0 * m + eps0
    k2 = max(k0 * k0, kL * kL)

    def feasible(psi, ups):
        return (need <= _ql_source_term(c, psi, ups)) & (
            k2 <= (c / d) * _half_ratio_arr(psi, ups, length)
        )

    found = search_hyperbolic_weights(length, feasible)
    if found is None:
        return Inconclusive("no feasible (psi, upsilon) on the search grid", "ql-stable")
    psi, ups = found
    params = WeightParams(psi, ups, length)
    src = float(_ql_source_term(c, psi, ups))
    gain = (c / d) * half_ratio(params)
    if not (need <= src and k2 <= gain):
        return Inconclusive("witness failed re-verification", "ql-stable")
    return CertifiedStable(
        rate=c * psi * math.sqrt(ups),
        witness=params,
        method="ql-stable",
        details={"source_bound": src, "gain_bound": gain, "lhs": lhs},
    )


def instability_gain_bound(c, d, eta):
    """``(d/c) e^{-eta}``: squared gains at or above it keep the energy from decaying."""
    return (d / c) * math.exp(-eta)


def certify_ql_instability(nn, eps0, c, d, length, k0, kL, eta):
    """Exponential-weight (``psi = eta/L``, ``upsilon = 1``) instability certificate."""
    if not nn > eps0 > 0:
        raise AssumptionViolation(f"need N > eps0 > 0, got N={nn}, eps0={eps0}")
    if not eta > 0:
        raise AssumptionViolation("eta must be positive")
    if not d >= c > 0:
        raise ValueError("need d >= c > 0")
    growth = (nn - eps0) * length
    bound = instability_gain_bound(c, d, eta)
    details = {"growth": growth, "eta_c": eta * c, "gain_bound": bound}
    if not growth > eta * c:
        return Inconclusive(f"(N - eps0) L = {growth:g} <= eta c = {eta * c:g}", "ql-unstable")
    if not (k0 * k0 >= bound and kL * kL >= bound):
        return Inconclusive(
            f"min(k0^2, kL^2) = {min(k0 * k0, kL * kL):g} < (d/c) e^-eta = {bound:g}",
            "ql-unstable",
        )
    return CertifiedUnstable(
        witness=WeightParams(eta / length, 1.0, length), method="ql-unstable", details=details
    )


def certify_model(model: QuasilinearModel, length, k0, kL, eta=None):
    """Dispatch on the source type: dissipative/coupling -> stability,
    amplifying -> instability (needs ``eta``)."""
    src = model.source
    if isinstance(src, AmplifyingSource):
        if eta is None:
            raise ValueError("instability certificate needs eta")
        return certify_ql_instability(src.nn, model.eps0, model.c, model.d, length, k0, kL, eta)
    return certify_ql_stability(model.c, model.d, model.eps0, src.m, length, k0, kL)


# --- simulation ---------------------------------------------------------------


@dataclass
class AssumptionLog:
    eps0: float
    c: float
    d: float
    rows: list = field(default_factory=list)

    header = ("t", "max_dxlambda", "min_lp", "max_lp", "min_lm", "max_lm")

    def add(self, t, max_dx, lp, lm):
        self.rows.append(
            (t, max_dx, float(lp.min()), float(lp.max()), float(lm.min()), float(lm.max()))
        )

    @property
    def violations(self) -> list:
        out = []
        tol = 1e-6
        for t, mx, lpmin, lpmax, lmmin, lmmax in self.rows:
            if mx > self.eps0 * (1 + tol):
                out.append(f"t={t:.6g}: |d_x lambda| = {mx:.6g} > eps0 = {self.eps0:g}")
            if lpmin < self.c * (1 - _REL) or lpmax > self.d * (1 + _REL):
                out.append(f"t={t:.6g}: lambda_+ in [{lpmin:.6g}, {lpmax:.6g}] not in [c, d]")
            if lmmax > -self.c * (1 - _REL) or lmmin < -self.d * (1 + _REL):
                out.append(f"t={t:.6g}: lambda_- in [{lmmin:.6g}, {lmmax:.6g}] not in [-d, -c]")
        return out

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(self.header))


@dataclass
class QLSimResult:
    records: list
    state: GridState
    log: AssumptionLog
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def _max_dx_lambda(lp, lm, dx):
    return float(max(np.max(np.abs(np.gradient(lp, dx))), np.max(np.abs(np.gradient(lm, dx)))))


def simulate_ql(
    model: QuasilinearModel,
    k0: float,
    kL: float,
    initial: GridState | None = None,
    t_final: float = 5.0,
    n_cells: int = 400,
    cfl: float = 0.9,
    length: float = 1.0,
    weights: WeightFamily | None = None,
    amplitude: float = 1e-2,
    eta: float | None = None,
    max_records: int = 1000,
) -> QLSimResult:
    """Upwind run with local speeds; energy weights evaluated at ``x - L/2``.

    Without explicit ``weights`` the witness of :func:`certify_model` is used
    (``eta`` is needed for amplifying sources).  The time step is
    ``cfl * dx / d``.
    """
    if initial is None:
        initial = sine_bump_pair(n_cells, length, amplitude)
    length = initial.length
    n = initial.n_cells
    dx = initial.dx
    check_compatibility(initial, k0, kL)
    if not 0 < cfl <= 1:
        raise CFLViolation(f"CFL number must be in (0, 1], got {cfl}")

    verdict = None
    if weights is None:
        verdict = certify_model(model, length, k0, kL, eta)
        if isinstance(verdict, Inconclusive):
            raise ValueError(f"no certificate to take witness weights from: {verdict.reason}")
        weights = Hyperbolic(verdict.witness)
    wp, wm = weight_arrays(weights, initial.x, 0.5 * length)

    dt = cfl * dx / model.d
    r = dt / dx
    n_steps = max(1, int(math.ceil(t_final / dt - 1e-9)))
    every = int(math.ceil(n_steps / max_records))
    log = AssumptionLog(model.eps0, model.c, model.d)

    dp = initial.delta_plus.copy()
    dm = initial.delta_minus.copy()
    state = GridState(n, dx, 0.0, dp, dm)
    records = [record_state(state, wp, wm)]
    running = 0.0
    for i in range(n_steps + 1):
        try:
            lp, lm, gp, gm = model_eval(model, dp, dm)
        except AdmissibilityViolation as exc:
            raise AdmissibilityViolation(f"t={i * dt:.6g}: {exc}", log) from None
        running = max(running, _max_dx_lambda(lp, lm, dx))
        if i % every == 0 or i == n_steps:
            log.add(i * dt, running, lp, lm)
        if i == n_steps:
            break
        if r * max(float(np.max(np.abs(lp))), float(np.max(np.abs(lm)))) > 1.0 + 1e-12:
            raise CFLViolation(f"local CFL number exceeds 1 at t={i * dt:.6g}")
        new_p = np.empty_like(dp)
        new_m = np.empty_like(dm)
        kernels.upwind_quasilinear(dp, dm, lp, lm, gp, gm, r, dt, new_p, new_m)
        new_m[n] = kL * new_p[n]
        new_p[0] = k0 * new_m[0]
        dp, dm = new_p, new_m
        step_no = i + 1
        if step_no % every == 0 or step_no == n_steps:
            state = GridState(n, dx, step_no * dt, dp, dm)
            records.append(record_state(state, wp, wm))

    state = GridState(n, dx, n_steps * dt, dp, dm)
    meta = {
        "scheme": "first-order upwind with local speeds, explicit Euler source",
        "backend": kernels.BACKEND,
        "cfl": cfl,
        "dt": dt,
        "n_cells": n,
        "n_steps": n_steps,
        "record_every": every,
        "k0": k0,
        "kL": kL,
        "c": model.c,
        "d": model.d,
        "eps0": model.eps0,
        "source": repr(model.source),
        "weights": repr(weights),
        "weight_shift": 0.5 * length,
    }
    if verdict is not None:
        meta["certificate"] = verdict.tag
    return QLSimResult(records, state, log, meta)

"""Quadratic Lyapunov functionals and certificates for the linear 2x2 system

    (d+)_t + (d+)_x + M d- = 0,    (d-)_t - (d-)_x + M d+ = 0,    x in (0, L)
    d+(t, 0) = k d-(t, 0),         d-(t, L) = d+(t, L).

Three certifiers are provided:

* :func:`certify_exponential` -- exponential weights, ``|k| <= exp(-lam L)``
  and ``M < lam / (1 + exp(2 lam L))``;
* :func:`certify_hyperbolic` -- hyperbolic weights, ``M <= psi/2 (1/s - s)``
  with ``s = sqrt(upsilon)`` and ``k^2 < h_+(L)/h_-(L)``; decay rate
  ``psi * s``;
* :func:`certify_instability_affine` -- affine weights, energy nondecreasing
  when ``M L < 1/2`` and ``k^2 >= (1 + 2ML)/(1 - 2ML)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import GridTooCoarse
from .weights import Affine, Exponential, Hyperbolic, WeightFamily, WeightParams

__all__ = [
    "LinearSystemParams",
    "CertifiedStable",
    "CertifiedUnstable",
    "Inconclusive",
    "StabilityVerdict",
    "EnergyRecord",
    "energy",
    "weight_arrays",
    "decay_rate",
    "exponential_bound_objective",
    "hyperbolic_bound_objective",
    "lambert_w",
    "sup_exponential_bound",
    "exponential_bound_lambert",
    "sup_hyperbolic_bound",
    "certify_exponential",
    "certify_hyperbolic",
    "certify_instability_affine",
    "search_hyperbolic_weights",
]


@dataclass(frozen=True)
class LinearSystemParams:
    m: float
    length: float
    k: float

    def __post_init__(self):
        # m = 0 (pure transport) is admitted; the affine certifier uses it.
        if not (self.m >= 0 and math.isfinite(self.m)):
            raise ValueError(f"m must be >= 0, got {self.m!r}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"length must be positive, got {self.length!r}")
        if not math.isfinite(self.k):
            raise ValueError(f"k must be finite, got {self.k!r}")

    @property
    def ml(self) -> float:
        return self.m * self.length


@dataclass(frozen=True)
class CertifiedStable:
    rate: float
    witness: object
    method: str
    heuristic_rate: bool = False
    details: dict = field(default_factory=dict, compare=False)

    tag = "S"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("certified decay rate must be positive")


@dataclass(frozen=True)
class CertifiedUnstable:
    witness: object
    method: str
    details: dict = field(default_factory=dict, compare=False)

    tag = "U"


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    method: str

    tag = "I"


StabilityVerdict = Union[CertifiedStable, CertifiedUnstable, Inconclusive]


@dataclass(frozen=True)
class EnergyRecord:
    time: float
    energy: float
    l2_norm: float
    sup_norm: float


def weight_arrays(family: WeightFamily, x, shift: float):
    """``h_+(x - shift)``, ``h_-(x - shift)`` on the node grid ``x``."""
    return family.values(np.asarray(x, dtype=float) - shift)


def energy(state, family: WeightFamily, shift: float) -> float:
    """``1/2 int_0^L h_+(x-shift) d+^2 + h_-(x-shift) d-^2 dx`` (trapezoid).

    ``state`` is any object with ``delta_plus``, ``delta_minus`` (node values
    on ``[0, L]``) and ``dx``.
    """
    dp = np.asarray(state.delta_plus, dtype=float)
    dm = np.asarray(state.delta_minus, dtype=float)
    n_cells = dp.shape[0] - 1
    if n_cells < 4:
        raise GridTooCoarse(f"need at least 4 cells, got {n_cells}")
    x = np.arange(n_cells + 1) * state.dx
    wp, wm = weight_arrays(family, x, shift)
    return float(kernels.weighted_energy(wp, wm, dp, dm, float(state.dx)))


def decay_rate(params: WeightParams, speed_floor: float = 1.0) -> float:
    """Energy decay rate ``speed_floor * psi * sqrt(upsilon)``."""
    return speed_floor * params.psi * math.sqrt(params.upsilon)


# --- supremum constants -------------------------------------------------------


def exponential_bound_objective(z):
    return z / (1.0 + np.exp(2.0 * z))


def hyperbolic_bound_objective(z):
    """``z/2 (1/tanh z - tanh z)``, simplified to ``z / sinh(2z)``."""
    z = np.asarray(z, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.where(z == 0.0, 0.5, z / np.sinh(2.0 * np.where(z == 0.0, 1.0, z)))
    return float(out) if out.ndim == 0 else out


def lambert_w(x: float, tol: float = 1e-15, maxiter: int = 100) -> float:
    """Principal branch of ``w e^w = x`` for ``x >= 0`` by Newton iteration."""
    if x < 0:
        raise ValueError("only x >= 0 is supported")
    if x == 0:
        return 0.0
    w = math.log1p(x)
    for _ in range(maxiter):
        ew = math.exp(w)
        step = (w * ew - x) / (ew * (w + 1.0))
        w -= step
        if abs(step) <= tol * max(1.0, abs(w)):
            break
    return w


def exponential_bound_lambert() -> float:
    """``W(1/e) / 2``: the closed form of ``sup z / (1 + e^{2z})``."""
    return lambert_w(math.exp(-1.0)) / 2.0


def sup_exponential_bound(tol: float = 1e-9) -> float:
    """``sup_{z>0} z / (1 + e^{2z})`` by bounded scalar maximisation."""
    res = minimize_scalar(
        lambda z: -exponential_bound_objective(z),
        bounds=(0.0, 5.0),
        method="bounded",
        options={"xatol": min(tol, 1e-10)},
    )
    return float(-res.fun)


def sup_hyperbolic_bound(z_min: float = 1e-8, z_max: float = 10.0, n: int = 4001) -> float:
    """``sup_{z>0} z / sinh(2z)``.

    The objective is decreasing in ``z``, so the supremum ``1/2`` is only
    approached as ``z -> 0+``.  The maximum over a log grid is returned after
    checking that it sits at the left end of the grid.
    """
    z = np.geomspace(z_min, z_max, n)
    vals = hyperbolic_bound_objective(z)
    # near z = 0 neighbouring values differ only by rounding
    if int(np.argmax(vals)) != 0 or not np.all(np.diff(vals) <= 4 * np.finfo(float).eps):
        raise RuntimeError("objective is not decreasing; supremum location unexpected")
    return float(vals[0])


# --- certificates -------------------------------------------------------------


def certify_exponential(sys: LinearSystemParams, lam_cap: float = 10.0) -> StabilityVerdict:
    """Exponential weights ``exp(-/+ lam x)``.

    The reported rate is ``margin * lam`` with ``margin = lam/(1+e^{2 lam L}) - M``;
    it is a heuristic figure of merit, not a proven decay rate, and the verdict
    says so via ``heuristic_rate=True``.
    """
    L = sys.length
    ak = abs(sys.k)
    if ak >= 1.0:
        return Inconclusive(f"|k|={ak:g} >= 1 > exp(-lam L) for every lam > 0", "exp")
    lam_max = lam_cap / L if ak == 0.0 else min(-math.log(ak) / L, lam_cap / L)
    res = minimize_scalar(
        lambda lam: -lam / (1.0 + math.exp(2.0 * lam * L)),
        bounds=(0.0, lam_max),
        method="bounded",
        options={"xatol": 1e-12 * max(1.0, lam_max)},
    )
    lam = float(res.x)
    # the bounded search may stop short of the endpoint when the peak is beyond it
    for cand in (lam_max,):
        if cand / (1.0 + math.exp(2 * cand * L)) > lam / (1.0 + math.exp(2 * lam * L)):
            lam = cand
    bound = lam / (1.0 + math.exp(2.0 * lam * L))
    margin = bound - sys.m
    if lam > 0 and margin > 0 and ak <= math.exp(-lam * L):
        return CertifiedStable(
            rate=margin * lam,
            witness=lam,
            method="exp",
            heuristic_rate=True,
            details={"lam": lam, "bound": bound, "margin": margin},
        )
    return Inconclusive(
        f"M={sys.m:g} >= max admissible lam/(1+exp(2 lam L))={bound:.6g}", "exp"
    )


def _upsilon_from_gap(psi, log_gap, length):
    t2 = np.tanh(psi * length) ** 2
    return t2 + (1.0 - t2) * np.exp(log_gap)


def search_hyperbolic_weights(
    length: float,
    feasible: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n_psi: int = 64,
    n_upsilon: int = 64,
    rounds: int = 3,
    psi_range=(1e-4, 10.0),
    log_gap_min: float = -27.0,
):
    """Maximise ``psi * sqrt(upsilon)`` over feasible hyperbolic weights.

    ``psi`` runs on a log grid over ``psi_range / length``; ``upsilon`` is
    parametrised by its relative distance to the positivity bound,
    ``upsilon = t^2 + (1 - t^2) * exp(log_gap)`` with ``t = tanh(psi L)``,
    ``log_gap`` on a uniform grid in ``[log_gap_min, 0]`` (``0`` is
    ``upsilon = 1``).  The best grid point is then refined by alternating line
    searches with spans shrinking by 4 per round.  Ties in the rate go to the
    smaller ``psi``.  Returns ``(psi, upsilon)`` or ``None``.
    """
    lp_lo = math.log(psi_range[0] / length)
    lp_hi = math.log(psi_range[1] / length)

    def score(lp, lg):
        psi = np.exp(lp)
        ups = _upsilon_from_gap(psi, lg, length)
        ok = feasible(psi, ups) & (ups > np.tanh(psi * length) ** 2) & (ups <= 1.0)
        return np.where(ok, psi * np.sqrt(ups), -np.inf)

    lp = np.linspace(lp_lo, lp_hi, n_psi)
    lg = np.linspace(log_gap_min, 0.0, n_upsilon)
    LP, LG = np.meshgrid(lp, lg, indexing="ij")
    S = score(LP, LG)
    if not np.isfinite(S).any():
        return None
    # argmax over a C-ordered array whose first axis is psi picks the smallest
    # psi among exact ties
    i, j = np.unravel_index(int(np.argmax(S)), S.shape)
    best_lp, best_lg, best_s = LP[i, j], LG[i, j], S[i, j]

    w_p = (lp_hi - lp_lo) / (n_psi - 1)
    w_g = -log_gap_min / (n_upsilon - 1)
    for _ in range(rounds):
        cand = np.clip(best_lp + np.linspace(-w_p, w_p, 17), lp_lo, lp_hi)
        s = score(cand, np.full_like(cand, best_lg))
        if s.max() > best_s:
            best_lp, best_s = cand[int(np.argmax(s))], s.max()
        cand = np.clip(best_lg + np.linspace(-w_g, w_g, 17), log_gap_min, 0.0)
        s = score(np.full_like(cand, best_lp), cand)
        if s.max() > best_s:
            best_lg, best_s = cand[int(np.argmax(s))], s.max()
        w_p /= 4.0
        w_g /= 4.0

    psi = float(np.exp(best_lp))
    ups = float(_upsilon_from_gap(psi, best_lg, length))
    return psi, ups


def _hyperbolic_source_term(psi, ups):
    s = np.sqrt(ups)
    return 0.5 * psi * (1.0 / s - s)


def _boundary_ratio(psi, ups, length):
    s = np.sqrt(ups)
    t = np.tanh(psi * length)
    return (s - t) / (s + t)


def hyperbolic_conditions(sys: LinearSystemParams, psi: float, upsilon: float) -> dict:
    """Both defining inequalities of the hyperbolic certificate at one point."""
    src = float(_hyperbolic_source_term(psi, upsilon))
    gain = float(_boundary_ratio(psi, upsilon, sys.length))
    return {
        "source_bound": src,
        "gain_bound": gain,
        "source_ok": sys.m <= src,
        "gain_ok": sys.k**2 < gain,
        "positive": upsilon > math.tanh(psi * sys.length) ** 2 and upsilon <= 1.0,
    }


def certify_hyperbolic(sys: LinearSystemParams) -> StabilityVerdict:
    if sys.ml >= 0.5:
        return Inconclusive(f"M L={sys.ml:g} >= 1/2", "hyp")
    k2 = sys.k**2
    if k2 >= 1.0:
        return Inconclusive(f"k^2={k2:g} >= 1 (gain bound supremum not attained)", "hyp")

    def feasible(psi, ups):
        return (sys.m <= _hyperbolic_source_term(psi, ups)) & (
            k2 < _boundary_ratio(psi, ups, sys.length)
        )

    found = search_hyperbolic_weights(sys.length, feasible)
    if found is None:
        return Inconclusive("no feasible (psi, upsilon) on the search grid", "hyp")
    psi, ups = found
    cond = hyperbolic_conditions(sys, psi, ups)
    if not (cond["source_ok"] and cond["gain_ok"] and cond["positive"]):
        return Inconclusive("witness failed re-verification", "hyp")
    params = WeightParams(psi, ups, sys.length)
    return CertifiedStable(rate=decay_rate(params), witness=params, method="hyp", details=cond)


def affine_threshold(ml: float) -> float:
    """``(1 + 2ML)/(1 - 2ML)``: the squared gain above which energy grows."""
    return (1.0 + 2.0 * ml) / (1.0 - 2.0 * ml)


def certify_instability_affine(sys: LinearSystemParams) -> StabilityVerdict:
    if sys.ml >= 0.5:
        return Inconclusive(f"M L={sys.ml:g} >= 1/2: affine weights not positive", "affine")
    thr = affine_threshold(sys.ml)
    k2 = sys.k**2
    if k2 >= thr:
        return CertifiedUnstable(
            witness=Affine(sys.m, sys.length),
            method="affine",
            details={"slope": 2.0 * sys.m, "k2": k2, "threshold": thr},
        )
    return Inconclusive(f"k^2={k2:g} < (1+2ML)/(1-2ML)={thr:.6g}", "affine")


def witness_family(verdict: StabilityVerdict, length: float) -> WeightFamily | None:
    """Weight family carried by a certificate, if any."""
    if isinstance(verdict, CertifiedStable):
        if isinstance(verdict.witness, WeightParams):
            return Hyperbolic(verdict.witness)
        return Exponential(float(verdict.witness), length)
    if isinstance(verdict, CertifiedUnstable) and isinstance(verdict.witness, WeightFamily):
        return verdict.witness
    return None

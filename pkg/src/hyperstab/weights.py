"""Weight functions for quadratic Lyapunov functionals.

Three families are supported, all defined on ``[-L, L]``:

* hyperbolic  ``h_pm(x) = sqrt(upsilon) cosh(psi x) -/+ sinh(psi x)``
* exponential ``h_pm(x) = exp(-/+ lam x)`` (hyperbolic with ``upsilon = 1``)
* affine      ``h_pm(x) = 1 +/- 2 m x``

plus the constant weight ``h_pm = 1``.  In every family the derivatives are
linear combinations of the weights themselves,
``(h_+', h_-') = R (h_+, h_-)`` with a constant 2x2 matrix ``R``; derivatives
are computed through that representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, PositivityViolation

__all__ = [
    "WeightParams",
    "WeightFamily",
    "Hyperbolic",
    "Exponential",
    "Affine",
    "Constant",
    "validate",
    "evaluate",
    "evaluate_derivative",
    "ratio",
    "half_ratio",
    "sample_table",
]

_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class WeightParams:
    """Parameters ``(psi, upsilon, L)`` of a hyperbolic weight pair."""

    psi: float
    upsilon: float
    half_length: float

    def __post_init__(self):
        if not (self.psi > 0 and math.isfinite(self.psi)):
            raise ValueError(f"psi must be positive and finite, got {self.psi!r}")
        if not (self.half_length > 0 and math.isfinite(self.half_length)):
            raise ValueError(f"half_length must be positive, got {self.half_length!r}")
        if not (self.upsilon > 0 and math.isfinite(self.upsilon)):
            raise ValueError(f"upsilon must be positive, got {self.upsilon!r}")

    @property
    def positivity_bound(self) -> float:
        return math.tanh(self.psi * self.half_length) ** 2


def validate(params: WeightParams) -> WeightParams:
    """Return ``params`` if the weights stay positive on ``[-L, L]``.

    The boundary case ``upsilon == tanh(psi L)**2`` is rejected: there
    ``h_+(L) = 0``.
    """
    bound = params.positivity_bound
    if not params.upsilon > bound:
        raise PositivityViolation(params.upsilon, bound)
    return params


def _side(side: str) -> int:
    if side in ("plus", "+", "p"):
        return 0
    if side in ("minus", "-", "m"):
        return 1
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


class WeightFamily:
    """Common interface: values of ``h_+``/``h_-`` and the derivative matrix."""

    half_length: float

    def plus(self, x):
        raise NotImplementedError

    def minus(self, x):
        raise NotImplementedError

    def representation(self) -> np.ndarray:
        """Matrix ``R`` with ``(h_+', h_-') = R @ (h_+, h_-)``."""
        raise NotImplementedError

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        lim = self.half_length * (1.0 + _DOMAIN_SLACK)
        if np.any(np.abs(x) > lim):
            raise DomainViolation(
                f"|x| <= L={self.half_length} required, got max |x|={np.max(np.abs(x))}"
            )
        return x

    def values(self, x):
        """Both weights at ``x`` as a pair of arrays (domain-checked)."""
        x = self.check_domain(x)
        return self.plus(x), self.minus(x)

    def derivatives(self, x):
        hp, hm = self.values(x)
        r = self.representation()
        return r[0, 0] * hp + r[0, 1] * hm, r[1, 0] * hp + r[1, 1] * hm


class Hyperbolic(WeightFamily):
    def __init__(self, params: WeightParams):
        self.params = validate(params)
        self.psi = params.psi
        self.sqrt_upsilon = math.sqrt(params.upsilon)
        self.half_length = params.half_length

    def plus(self, x):
        return self.sqrt_upsilon * np.cosh(self.psi * x) - np.sinh(self.psi * x)

    def minus(self, x):
        return self.sqrt_upsilon * np.cosh(self.psi * x) + np.sinh(self.psi * x)

    def representation(self):
        u = self.params.upsilon
        s = self.sqrt_upsilon
        a = self.psi * (u + 1.0) / (2.0 * s)
        b = self.psi * (u - 1.0) / (2.0 * s)
        return np.array([[-a, b], [-b, a]])

    def __repr__(self):
        p = self.params
        return f"Hyperbolic(psi={p.psi!r}, upsilon={p.upsilon!r}, L={p.half_length!r})"


class Exponential(Hyperbolic):
    """``exp(-/+ lam x)``, evaluated through the hyperbolic closed form."""

    def __init__(self, lam: float, half_length: float):
        super().__init__(WeightParams(lam, 1.0, half_length))
        self.lam = lam

    def __repr__(self):
        return f"Exponential(lam={self.lam!r}, L={self.half_length!r})"


class Affine(WeightFamily):
    def __init__(self, m: float, half_length: float):
        if not (m >= 0 and math.isfinite(m)):
            raise ValueError(f"affine slope parameter must be >= 0, got {m!r}")
        if not half_length > 0:
            raise ValueError(f"half_length must be positive, got {half_length!r}")
        if not m * half_length < 0.5:
            raise PositivityViolation(m * half_length, 0.5, what="m*L", relation="1/2")
        self.m = m
        self.half_length = half_length

    def plus(self, x):
        return 1.0 + 2.0 * self.m * np.asarray(x, dtype=float)

    def minus(self, x):
        return 1.0 - 2.0 * self.m * np.asarray(x, dtype=float)

    def representation(self):
        m = self.m
        return np.array([[m, m], [-m, -m]])

    def __repr__(self):
        return f"Affine(m={self.m!r}, L={self.half_length!r})"


class Constant(Affine):
    def __init__(self, half_length: float):
        super().__init__(0.0, half_length)

    def __repr__(self):
        return f"Constant(L={self.half_length!r})"


def evaluate(family: WeightFamily, side: str, x):
    """Value of ``h_+`` (``side='plus'``) or ``h_-`` at ``x``, ``|x| <= L``."""
    x = family.check_domain(x)
    out = family.plus(x) if _side(side) == 0 else family.minus(x)
    return float(out) if np.ndim(out) == 0 else out


def evaluate_derivative(family: WeightFamily, side: str, x):
    """Derivative of ``h_+`` or ``h_-`` via the linear-combination identity."""
    dp, dm = family.derivatives(x)
    out = dp if _side(side) == 0 else dm
    if np.ndim(out) == 0:
        return float(out)
    return np.broadcast_to(out, np.shape(x)).copy()


def ratio(params: WeightParams, x):
    """``h_+(x) / h_-(x) = (sqrt(u) - tanh(psi x)) / (sqrt(u) + tanh(psi x))``."""
    validate(params)
    Hyperbolic(params).check_domain(x)
    s = math.sqrt(params.upsilon)
    t = np.tanh(params.psi * np.asarray(x, dtype=float))
    out = (s - t) / (s + t)
    return float(out) if np.ndim(out) == 0 else out


def half_ratio(params: WeightParams) -> float:
    """``h_+(L/2) / h_-(L/2)`` written in terms of ``psi L``.

    Uses ``tanh(z/2) = tanh(z) / (1 + 1/cosh(z))``; equals ``ratio(params, L/2)``.
    """
    validate(params)
    z = params.psi * params.half_length
    s = math.sqrt(params.upsilon) * (1.0 + 1.0 / math.cosh(z))
    t = math.tanh(z)
    return (s - t) / (s + t)


def sample_table(params: WeightParams, samples: int) -> np.ndarray:
    """Rows ``(x, h_plus, h_minus, ratio)`` on ``samples`` points of ``[-L, L]``."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    fam = Hyperbolic(params)
    x = np.linspace(-params.half_length, params.half_length, samples)
    hp, hm = fam.values(x)
    return np.column_stack([x, hp, hm, hp / hm])

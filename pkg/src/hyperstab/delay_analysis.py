"""Real exponential modes of the delayed closed loop.

With ``delta_+(t, 0) = k delta_-(t - tau, 0)`` the ansatz
``(delta_+, delta_-) = e^{sigma t} (f(x), g(x))``, ``0 < sigma < M``, gives
``f, g`` as combinations of ``sin(omega x)``, ``cos(omega x)`` with
``omega = sqrt(M^2 - sigma^2)``.  The remaining boundary law
``f(L) = g(L)`` holds iff

    H(sigma) = (sigma + M) tan(omega L) / omega - (k e^{-sigma tau} - 1)/(k e^{-sigma tau} + 1) = 0.

For ``M L`` in ``(pi/2, pi)`` the tangent has no pole for ``sigma`` in
``(0, sigma_max)``, ``sigma_max = sqrt(M^2 - (pi / 2L)^2)``, and ``H -> -inf``
at ``sigma_max``; a positive value of ``H`` at some ``sigma_0`` therefore
brackets a growing mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation, DegenerateGain, DomainViolation, PoleProximity

__all__ = [
    "ModeCoefficients",
    "SeparationMode",
    "NotFound",
    "DelayWitness",
    "sigma_max",
    "eval_H",
    "eval_F",
    "eval_G",
    "find_unstable_sigma",
    "select_sigma0",
    "scan_unstable_sigma",
    "destabilizing_tau",
    "separation_mode",
    "special_pole_mode",
    "bisect",
]

_POLE_TOL = 1e-9
_GAIN_TOL = 1e-12


def sigma_max(m: float, length: float) -> float:
    """Upper end ``sqrt(M^2 - (pi/2L)^2)`` of the pole-free sigma branch."""
    q = m * m - (math.pi / (2.0 * length)) ** 2
    if q <= 0:
        raise AssumptionViolation(f"M L={m * length:g} must exceed pi/2")
    return math.sqrt(q)


def _check_pole(omega_l: float):
    # distance to the nearest odd multiple of pi/2
    r = math.remainder(omega_l - math.pi / 2.0, math.pi)
    if abs(r) < _POLE_TOL:
        raise PoleProximity(f"omega L={omega_l!r} is within {_POLE_TOL} of a tan pole")


def eval_G(k: float, sigma0: float, tau: float) -> float:
    """``(k e^{-sigma0 tau} - 1) / (k e^{-sigma0 tau} + 1)``."""
    q = k * math.exp(-sigma0 * tau)
    if abs(q + 1.0) < _GAIN_TOL:
        raise DegenerateGain(f"k={k!r} equals -exp(sigma tau)")
    if q < -1.0:
        raise DomainViolation(f"k={k!r} < -exp(sigma tau): outside the domain of G")
    return (q - 1.0) / (q + 1.0)


def eval_H(sigma: float, k: float, tau: float, m: float, length: float) -> float:
    if not 0.0 < sigma < m:
        raise DomainViolation(f"sigma must lie in (0, M)=(0, {m}), got {sigma!r}")
    omega = math.sqrt(m * m - sigma * sigma)
    _check_pole(omega * length)
    q = k * math.exp(-sigma * tau)
    if abs(q + 1.0) < _GAIN_TOL:
        raise DegenerateGain(f"k={k!r} equals -exp(sigma tau) at sigma={sigma!r}")
    return (sigma + m) * math.tan(omega * length) / omega - (q - 1.0) / (q + 1.0)


def eval_F(s: float, m: float, length: float) -> float:
    """``sqrt((M+s)/(M-s)) tan(sqrt(M^2 - s^2) L)`` on ``[0, sigma_max)``."""
    smax = sigma_max(m, length)
    if not 0.0 <= s < smax:
        raise DomainViolation(f"s must lie in [0, {smax}), got {s!r}")
    return math.sqrt((m + s) / (m - s)) * math.tan(math.sqrt(m * m - s * s) * length)


def bisect(fn, lo: float, hi: float, xtol: float = 1e-12, maxiter: int = 200):
    """Bisection for a sign change of ``fn`` on ``[lo, hi]``.

    Runs until the bracket is below ``xtol`` and then on to machine resolution,
    so that the residual is as small as the floating-point grid allows.
    """
    f_lo = fn(lo)
    f_hi = fn(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError("no sign change on the bracket")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = fn(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    best = lo if abs(f_lo) <= abs(f_hi) else hi
    if hi - lo > xtol:
        raise RuntimeError(f"bisection did not converge: bracket width {hi - lo}")
    return best


@dataclass(frozen=True)
class NotFound:
    """No sign change located; ``h_lo``/``h_hi`` are the endpoint values of H."""

    h_lo: float
    h_hi: float
    reason: str = ""

    def __bool__(self):
        return False


def find_unstable_sigma(k: float, tau: float, m: float, length: float, sigma0: float):
    """Root ``sigma* >= sigma0`` of ``H(., k, tau)`` or :class:`NotFound`."""
    ml = m * length
    if not math.pi / 2 < ml < math.pi:
        raise AssumptionViolation(f"M L={ml:g} must lie in (pi/2, pi)")
    smax = sigma_max(m, length)
    if not 0.0 < sigma0 < smax:
        raise DomainViolation(f"sigma0 must lie in (0, {smax}), got {sigma0!r}")
    if k < 0 and -k >= math.exp(sigma0 * tau):
        # k <= -e^{sigma tau} somewhere on (sigma0, ...): G leaves its domain
        return NotFound(math.nan, math.nan, "k <= -exp(sigma0 tau)")

    def h(s):
        return eval_H(s, k, tau, m, length)

    h_lo = h(sigma0)
    # walk towards sigma_max until H is negative (H -> -inf there)
    hi = None
    h_hi = math.nan
    for j in range(2, 15):
        cand = smax * (1.0 - 10.0 ** (-j))
        if cand <= sigma0:
            continue
        try:
            h_hi = h(cand)
        except PoleProximity:
            break
        if h_hi < 0:
            hi = cand
            break
    if not h_lo > 0 or hi is None:
        return NotFound(h_lo, h_hi, "no sign change between sigma0 and sigma_max")
    return bisect(h, sigma0, hi)


def scan_unstable_sigma(k: float, tau: float, m: float, length: float, n_scan: int = 99):
    """Any root on the pole-free branch: bisect from the first ``sigma0`` in
    ``{0.01, 0.02, ...} * sigma_max`` with ``H(sigma0) > 0``.

    Returns ``(sigma_star, sigma0)`` or :class:`NotFound`.
    """
    ml = m * length
    if not math.pi / 2 < ml < math.pi:
        raise AssumptionViolation(f"M L={ml:g} must lie in (pi/2, pi)")
    smax = sigma_max(m, length)
    best = -math.inf
    for j in range(1, n_scan + 1):
        s0 = smax * j / (n_scan + 1)
        if k < 0 and -k >= math.exp(s0 * tau):
            continue
        h0 = eval_H(s0, k, tau, m, length)
        best = max(best, h0)
        if h0 > 0:
            s = find_unstable_sigma(k, tau, m, length, s0)
            if isinstance(s, float):
                return s, s0
    return NotFound(best, math.nan, "H <= 0 at every scanned sigma0")


def select_sigma0(m: float, length: float) -> float:
    """Smallest ``sigma0`` in ``{0.01, 0.02, ...} * sigma_max`` with ``F + 1 > 0``."""
    smax = sigma_max(m, length)
    for j in range(1, 100):
        s = 0.01 * j * smax
        if eval_F(s, m, length) + 1.0 > 0:
            return s
    raise AssumptionViolation("no sigma0 with F(sigma0) + 1 > 0")


@dataclass
class DelayWitness:
    tau: float
    sigma0: float
    roots: list = field(default_factory=list)  # (k, sigma_star, H residual)
    requirements: dict = field(default_factory=dict)


def destabilizing_tau(
    k_hat: float, m: float, length: float, tau_start: float = 1.0, max_doublings: int = 40
) -> DelayWitness:
    """Smallest ``tau = tau_start * 2^j`` giving a growing mode for every grid gain.

    The gain grid is 11 points on ``[-0.9 k_hat, 0.9 k_hat]``.  Each root is
    residual-checked.  The two sufficient requirements of the large-delay
    argument (``F(sigma0) > G_sigma0(k_hat)`` and ``e^{sigma0 tau} > k_hat``) are
    reported alongside.
    """
    ml = m * length
    if not 0.75 * math.pi < ml < math.pi:
        raise AssumptionViolation(f"M L={ml:g} must lie in (3 pi/4, pi)")
    if not k_hat > 0:
        raise ValueError("k_hat must be positive")
    sigma0 = select_sigma0(m, length)
    f0 = eval_F(sigma0, m, length)
    gains = np.linspace(-0.9 * k_hat, 0.9 * k_hat, 11)
    tau = tau_start
    for _ in range(max_doublings):
        roots = []
        for k in gains:
            if k < 0 and -k >= math.exp(sigma0 * tau):
                break
            s = find_unstable_sigma(float(k), tau, m, length, sigma0)
            if isinstance(s, NotFound):
                break
            roots.append((float(k), s, eval_H(s, float(k), tau, m, length)))
        else:
            req = {
                "F_exceeds_G_khat": f0 > eval_G(k_hat, sigma0, tau),
                "exp_sigma0_tau_exceeds_khat": math.exp(sigma0 * tau) > k_hat,
            }
            return DelayWitness(tau, sigma0, roots, req)
        tau *= 2.0
    raise RuntimeError("no destabilising delay found within the doubling budget")


@dataclass(frozen=True)
class ModeCoefficients:
    A: float
    B: float
    C: float
    D: float
    sigma: float
    omega: float


@dataclass
class SeparationMode:
    coeffs: ModeCoefficients
    m: float
    k: float
    tau: float
    x: np.ndarray
    f_samples: np.ndarray
    g_samples: np.ndarray
    system_residual: float

    def f(self, x):
        c = self.coeffs
        return c.A * np.sin(c.omega * x) + c.B * np.cos(c.omega * x)

    def g(self, x):
        c = self.coeffs
        return c.C * np.sin(c.omega * x) + c.D * np.cos(c.omega * x)

    def fields(self, t, x):
        """``(delta_+, delta_-) = e^{sigma t} (f(x), g(x))``."""
        e = np.exp(self.coeffs.sigma * np.asarray(t))
        return e * self.f(x), e * self.g(x)


def mode_matrix(sigma: float, omega: float, m: float) -> np.ndarray:
    """Linear system for ``(A, B, C, D)`` obtained by matching sin/cos terms."""
    return np.array(
        [
            [sigma, -omega, m, 0.0],
            [omega, sigma, 0.0, m],
            [m, 0.0, sigma, omega],
            [0.0, m, -omega, sigma],
        ]
    )


def separation_mode(
    sigma: float, k: float, tau: float, m: float, length: float, n_samples: int = 101
) -> SeparationMode:
    if not 0.0 < sigma < m:
        raise DomainViolation(f"sigma must lie in (0, M), got {sigma!r}")
    omega = math.sqrt(m * m - sigma * sigma)
    q = k * math.exp(-sigma * tau)
    coeffs = ModeCoefficients(
        A=m + q * sigma, B=-q * omega, C=-sigma - q * m, D=-omega, sigma=sigma, omega=omega
    )
    v = np.array([coeffs.A, coeffs.B, coeffs.C, coeffs.D])
    resid = float(np.max(np.abs(mode_matrix(sigma, omega, m) @ v)))
    scale = max(1.0, float(np.max(np.abs(v))) * max(m, omega, 1.0))
    if resid > 1e-10 * scale:
        raise RuntimeError(f"mode coefficients violate the linear system: {resid}")
    bc = abs(coeffs.B - q * coeffs.D)
    if bc > 1e-12 * scale:
        raise RuntimeError(f"mode violates f(0) = k e^(-sigma tau) g(0): {bc}")
    x = np.linspace(0.0, length, n_samples)
    mode = SeparationMode(coeffs, m, k, tau, x, np.empty(0), np.empty(0), resid)
    mode.f_samples = mode.f(x)
    mode.g_samples = mode.g(x)
    return mode


def special_pole_mode(m: float, length: float, tau: float):
    """Growing mode with ``k = -e^{sigma tau}`` and ``cos(omega L) = 0``.

    Returns ``(sigma, k, |f(L) - g(L)|)``.
    """
    smax = sigma_max(m, length)
    k = -math.exp(smax * tau)
    omega = math.sqrt(m * m - smax * smax)
    # with q = k e^{-sigma tau} = -1 exactly
    f_l = (m - smax) * math.sin(omega * length) + omega * math.cos(omega * length)
    g_l = -(smax - m) * math.sin(omega * length) - omega * math.cos(omega * length)
    return smax, k, abs(f_l - g_l)

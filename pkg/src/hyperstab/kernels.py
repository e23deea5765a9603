"""Inner loops of the upwind simulators and the energy quadrature.

Each kernel exists twice: an explicit loop compiled with numba and a
vectorised numpy version.  Both write into caller-provided output arrays and
leave the inflow boundary node untouched (index 0 for ``delta_plus``, index
``n`` for ``delta_minus``); the simulators impose the feedback laws there.
"""

import numpy as np

from . import _accel


def _upwind_linear_loop(dp, dm, nu, mdt, out_p, out_m):
    n = dp.shape[0] - 1
    for i in range(1, n + 1):
        out_p[i] = dp[i] - nu * (dp[i] - dp[i - 1]) - mdt * dm[i]
    for i in range(0, n):
        out_m[i] = dm[i] + nu * (dm[i + 1] - dm[i]) - mdt * dp[i]


def _upwind_linear_numpy(dp, dm, nu, mdt, out_p, out_m):
    out_p[1:] = dp[1:] - nu * (dp[1:] - dp[:-1]) - mdt * dm[1:]
    out_m[:-1] = dm[:-1] + nu * (dm[1:] - dm[:-1]) - mdt * dp[:-1]


def _upwind_ql_loop(dp, dm, lp, lm, gp, gm, r, dt, out_p, out_m):
    # lp > 0 everywhere, lm < 0 everywhere (checked by the caller)
    n = dp.shape[0] - 1
    for i in range(1, n + 1):
        out_p[i] = dp[i] - r * lp[i] * (dp[i] - dp[i - 1]) + dt * gp[i]
    for i in range(0, n):
        out_m[i] = dm[i] - r * lm[i] * (dm[i + 1] - dm[i]) + dt * gm[i]


def _upwind_ql_numpy(dp, dm, lp, lm, gp, gm, r, dt, out_p, out_m):
    out_p[1:] = dp[1:] - r * lp[1:] * (dp[1:] - dp[:-1]) + dt * gp[1:]
    out_m[:-1] = dm[:-1] - r * lm[:-1] * (dm[1:] - dm[:-1]) + dt * gm[:-1]


def _weighted_energy_loop(wp, wm, dp, dm, dx):
    n = dp.shape[0] - 1
    s = 0.0
    for i in range(n + 1):
        v = wp[i] * dp[i] * dp[i] + wm[i] * dm[i] * dm[i]
        if i == 0 or i == n:
            v *= 0.5
        s += v
    return 0.5 * dx * s


def _weighted_energy_numpy(wp, wm, dp, dm, dx):
    v = wp * dp * dp + wm * dm * dm
    return 0.5 * dx * (v.sum() - 0.5 * (v[0] + v[-1]))


numba_impl = {
    "upwind_linear": _accel.njit(_upwind_linear_loop),
    "upwind_quasilinear": _accel.njit(_upwind_ql_loop),
    "weighted_energy": _accel.njit(_weighted_energy_loop),
}
numpy_impl = {
    "upwind_linear": _upwind_linear_numpy,
    "upwind_quasilinear": _upwind_ql_numpy,
    "weighted_energy": _weighted_energy_numpy,
}

_active = numba_impl if _accel.USE_NUMBA else numpy_impl
BACKEND = "numba" if _accel.USE_NUMBA else "numpy"

upwind_linear = _active["upwind_linear"]
upwind_quasilinear = _active["upwind_quasilinear"]
weighted_energy = _active["weighted_energy"]


def trapezoid_l2(dp, dm, dx):
    """``sqrt(int dp^2 + dm^2 dx)`` by the composite trapezoid rule."""
    one = np.ones_like(dp)
    return float(np.sqrt(2.0 * weighted_energy(one, one, dp, dm, dx)))

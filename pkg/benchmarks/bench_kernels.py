"""
Benchmark the numba kernels against the numpy fallback.

Part 1 times each kernel in isolation for several grid sizes.  Part 2 times a
full linear simulation in a fresh interpreter for each backend, since the
backend is fixed at import time by HYPERSTAB_NO_JIT.

    python3 benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from hyperstab import _accel, kernels

SIZES = [400, 4_000, 40_000]
REPEATS = 200


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    dp, dm = rng.normal(size=(2, n + 1))
    lp = 1.0 + 0.1 * rng.random(n + 1)
    lm = -1.0 - 0.1 * rng.random(n + 1)
    gp, gm = rng.normal(size=(2, n + 1))
    return dp, dm, lp, lm, gp, gm


def _calls(impl, n):
    dp, dm, lp, lm, gp, gm = _inputs(n)
    op, om = np.zeros(n + 1), np.zeros(n + 1)
    return {
        "upwind_linear": lambda: impl["upwind_linear"](dp, dm, 0.9, 1e-3, op, om),
        "upwind_quasilinear": lambda: impl["upwind_quasilinear"](dp, dm, lp, lm, gp, gm, 0.8, 1e-3, op, om),
        "weighted_energy": lambda: impl["weighted_energy"](lp, -lm, dp, dm, 1.0 / n),
    }


def _time(fn):
    for _ in range(5):  # warmup, includes JIT compilation on first call
        fn()
    times = []
    for _ in range(REPEATS):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1e6)
    return np.median(times)


SIM_CODE = """
import time
from hyperstab import kernels
from hyperstab.linear_sim import simulate
from hyperstab.lyapunov import LinearSystemParams
sys_ = LinearSystemParams(0.2, 1.0, 0.5)
simulate(sys_, t_final=0.1, n_cells=50)  # warmup / compile
start = time.perf_counter()
simulate(sys_, t_final=20.0, n_cells=800)
print(kernels.BACKEND, time.perf_counter() - start)
"""


def main():
    print("=" * 72)
    print("KERNEL BENCHMARK: numba vs numpy fallback")
    print(f"numba available: {_accel.HAVE_NUMBA}, median of {REPEATS} calls, microseconds")
    print("=" * 72)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; both columns time the same code")
    print(f"{'kernel':<20}{'cells':>8}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for n in SIZES:
        fast, slow = _calls(kernels.numba_impl, n), _calls(kernels.numpy_impl, n)
        for name in fast:
            a, b = _time(fast[name]), _time(slow[name])
            print(f"{name:<20}{n:>8}{a:>12.2f}{b:>12.2f}{b / a:>9.1f}x")

    print("\n" + "=" * 72)
    print("END-TO-END: linear simulation, 800 cells, T = 20")
    print("=" * 72)
    for flag in ("0", "1"):
        env = dict(os.environ, HYPERSTAB_NO_JIT=flag)
        out = subprocess.run([sys.executable, "-c", SIM_CODE], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"{backend:<8}{float(seconds):>8.3f} s")


if __name__ == "__main__":
    main()

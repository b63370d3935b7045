"""Compare the numba and pure-numpy sparse-polynomial evaluators.

Run twice:

    python3 benchmarks/bench_accel.py
    KPWAVES_NO_NUMBA=1 python3 benchmarks/bench_accel.py

The workload mirrors the quadrature engine: evaluating the rational
symbol integrand of the dominant-kernel family at a large batch of
frequency points.
"""

import time

import numpy as np

from kpwaves import accel
from kpwaves.symbols import DerivativeTable, k0_symbol


def main():
    # a high-order derivative symbol gives a realistically dense numerator
    sym = DerivativeTable(k0_symbol(2)).derivative(1, 4)
    n_exps, n_coef = sym.numerator.arrays()
    d_exps, d_coef = sym.denominator.arrays()

    rng = np.random.default_rng(7)
    backend = "numba" if accel.HAVE_NUMBA else "numpy"
    print("backend: %s" % backend)
    for n_pts in (10_000, 100_000, 1_000_000):
        pts = rng.uniform(-5.0, 5.0, size=(n_pts, 2))
        out = np.empty(n_pts)
        accel.rational_eval(n_exps, n_coef, d_exps, d_coef, sym.denom_power,
                            pts, out)  # warm-up / jit compile
        reps = max(3, 300_000 // n_pts)
        t0 = time.perf_counter()
        for _ in range(reps):
            accel.rational_eval(n_exps, n_coef, d_exps, d_coef, sym.denom_power,
                                pts, out)
        dt = (time.perf_counter() - t0) / reps
        print("  %9d points: %8.3f ms  (%6.1f Mpts/s)"
              % (n_pts, dt * 1e3, n_pts / dt / 1e6))


if __name__ == "__main__":
    main()

"""Benchmark the numba kernels against the pure-numpy fallback.

Times the three hot layers (derivative jets, hierarchy right-hand side,
full adaptive propagation) on the raw kernel API, plus one pipeline-level
manifold sweep through the public interface with each backend active.

    python benchmarks/compare_backends.py [--repeat N] [--order N]

The numba numbers exclude compilation: kernels are warmed before timing
(with cache=True the compile cost is paid once per machine anyway).
"""
import argparse
import math
import statistics
import time

import numpy as np

from bomca import kernels
from bomca.hierarchy import IntegratorConfig
from bomca.manifold import sample_axis_window
from bomca.model import (EckartPotential, GaussianWavepacket, SystemSpec,
                         initial_action, initial_velocity_jet)

MASS = 30.0
HBAR = 1.0
DEPTH = 40.0
WIDTH = 4.32
ALPHA = 30.0 * math.pi


def launch_state(order):
    wp = GaussianWavepacket.from_energy(ALPHA, -0.7, 50.0, MASS)
    system = SystemSpec(mass=MASS, potential=EckartPotential(depth=DEPTH, width=WIDTH))
    x0 = -0.68 - 0.05j
    y0 = np.zeros(order + 3, np.complex128)
    y0[0] = x0
    y0[1:order + 2] = initial_velocity_jet(wp, system, x0, order).values
    y0[-1] = initial_action(wp, system, x0)
    return wp, system, y0


def time_op(fn, repeat, inner):
    best = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best.append((time.perf_counter() - t0) / inner)
    return statistics.median(best)


def bench_kernels(mod, order, repeat):
    _, _, y0 = launch_state(order)
    eck = (mod.POT_ECKART, DEPTH, WIDTH)
    dy = np.zeros_like(y0)
    out_times = np.array([0.425, 0.85])
    y_out = np.zeros((2, y0.shape[0]), np.complex128)

    def do_jet():
        status, _ = mod.potential_jet(eck[0], eck[1], eck[2], y0[0], order + 1)
        assert status == mod.OK

    def do_rhs():
        mod.hierarchy_rhs(y0, dy, order, eck[0], eck[1], eck[2], MASS, HBAR)

    def do_propagate():
        # high orders carry large derivative components, so the blowup
        # guard sits well above the default
        status, *_ = mod.propagate(y0.copy(), 0.0, out_times, order, eck[0], eck[1],
                                   eck[2], MASS, HBAR, mod.RHS_HIERARCHY,
                                   1e-10, 1e-10, 0.0, 0.0085, 1_000_000, 1e12, y_out)
        assert status == mod.OK

    return {
        "potential jet (order %d)" % (order + 1): time_op(do_jet, repeat, 2000),
        "hierarchy rhs (N=%d)" % order: time_op(do_rhs, repeat, 2000),
        "propagate to t=0.85": time_op(do_propagate, repeat, 5),
    }


def bench_pipeline(order, repeat):
    wp, system, _ = launch_state(order)
    integ = IntegratorConfig(blowup_threshold=1e12)

    def do_sweep():
        sweep = sample_axis_window(wp, system, order, 0.85, 0.5, 2.0, 20,
                                   integrator=integ)
        assert len(sweep.samples) >= 20

    return {"manifold sweep (20 pts)": time_op(do_sweep, repeat, 1)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timing repetitions (median)")
    ap.add_argument("--order", type=int, default=4, help="truncation order for the kernels")
    args = ap.parse_args()

    if not kernels.numba_available():
        raise SystemExit("numba is not importable; nothing to compare")

    results = {}
    for name in ("numpy", "numba"):
        mod = kernels.load_backend(name)
        previous = kernels.select_backend(name)
        try:
            if name == "numba":  # warm the jit before timing
                bench_kernels(mod, args.order, 1)
                bench_pipeline(args.order, 1)
            results[name] = bench_kernels(mod, args.order, args.repeat)
            results[name].update(bench_pipeline(args.order, args.repeat))
        finally:
            kernels.select_backend(previous)

    def fmt(seconds):
        if seconds < 1e-3:
            return f"{seconds * 1e6:>9.1f}us"
        if seconds < 1.0:
            return f"{seconds * 1e3:>9.2f}ms"
        return f"{seconds:>9.2f}s "

    width = max(len(k) for k in results["numpy"])
    print(f"{'operation'.ljust(width)}   {'numpy':>11} {'numba':>11} {'speedup':>9}")
    for op in results["numpy"]:
        a, b = results["numpy"][op], results["numba"][op]
        print(f"{op.ljust(width)}   {fmt(a)} {fmt(b)} {a / b:>8.1f}x")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Benchmark the numba and numpy kernel backends on the bundled scenario.

Times the full reference run plus the two hot primitives (kernel
convolution and upwind update) in isolation.  The numba functions are
warmed once before timing so compilation is excluded.

    python benchmarks/bench_backends.py [--n-cells N] [--t-final T] [--repeats R]
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from rampflow._accel import HAVE_NUMBA
from rampflow._kernels import kernel_funcs
from rampflow.diagnostics import l1_distance
from rampflow.scenario import paper_setup_scenario, run_scenario


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_primitives(scenario, backend, repeats):
    correlate, update = kernel_funcs(backend)
    grid = scenario.grid
    conv_w, react_w = scenario.weights()
    rng = np.random.default_rng(0)
    rho = rng.uniform(0.0, 1.0, grid.n_cells)
    ext_c = np.concatenate([rho, np.full(len(conv_w), rho[-1])])
    ext_r = np.concatenate(
        [np.full(-react_w.offset_lo, 0.3), rho, np.full(react_w.offset_hi, rho[-1])]
    )
    vel = 1.0 - np.clip(correlate(ext_c, conv_w.weights), 0.0, 1.0)
    r_on = np.clip(correlate(ext_r, react_w.weights), 0.0, 1.0)
    chi = np.zeros(grid.n_cells)
    chi[400:420] = 1.0

    t_corr = time_call(lambda: correlate(ext_r, react_w.weights), repeats)
    t_upd = time_call(
        lambda: update(rho, 0.3, vel, r_on, chi, np.zeros(grid.n_cells), 12.0, 0.0, 0.004, grid.dx),
        repeats,
    )
    return t_corr, t_upd


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-cells", type=int, default=1000)
    parser.add_argument("--t-final", type=float, default=6.0)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    scenario = paper_setup_scenario()
    scenario = replace(
        scenario,
        grid=replace(scenario.grid, n_cells=args.n_cells),
        solver=replace(scenario.solver, t_final=args.t_final, snapshot_stride=0),
    )

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    results = {}
    for backend in backends:
        run_scenario(scenario, backend=backend)  # warm up (jit compile, caches)
        t_run = time_call(lambda b=backend: run_scenario(scenario, backend=b), args.repeats)
        t_corr, t_upd = bench_primitives(scenario, backend, 200)
        results[backend] = (t_run, t_corr, t_upd)
        print(
            f"{backend:>6}: full run {t_run * 1e3:9.1f} ms | "
            f"reactive correlate {t_corr * 1e6:8.1f} us | "
            f"upwind update {t_upd * 1e6:8.1f} us"
        )

    if len(results) == 2:
        base = run_scenario(scenario, backend="numpy").final_state
        other = run_scenario(scenario, backend="numba").final_state
        speedup = results["numpy"][0] / results["numba"][0]
        print(f"numba speedup on full run: {speedup:.2f}x")
        print(f"backend final-state L1 difference: {l1_distance(base, other):.3e}")


if __name__ == "__main__":
    main()

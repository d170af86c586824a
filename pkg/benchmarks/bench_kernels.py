"""Compare the numba and pure-numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--nz 201] [--steps 300]

Times one coupled window step in isolation and a short scenario run per
backend, and reports the largest difference between the two exit traces.
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from lambda_store._kernels import get_backend
from lambda_store.field import Grid, MediumState, WindowStepper
from lambda_store.scenario import preset


def time_step(backend, config, repeats):
    stepper = WindowStepper(config.grid, config.medium, config.schedule, backend)
    sig = MediumState.ground(config.grid.nz).states
    e1, e3 = stepper.initial_fields(sig)
    t = 5e10
    stepper.step(sig, e1, e3, t)  # warm-up / JIT
    t0 = time.perf_counter()
    for _ in range(repeats):
        stepper.step(sig, e1, e3, t)
    return (time.perf_counter() - t0) / repeats


def run_exit(backend, config, steps):
    stepper = WindowStepper(config.grid, config.medium, config.schedule, backend)
    sig = MediumState.ground(config.grid.nz).states
    e1, e3 = stepper.initial_fields(sig)
    out = np.empty(steps)
    t0 = time.perf_counter()
    for n in range(steps):
        sig, e1, e3 = stepper.step(sig, e1, e3, n * config.grid.dt)
        out[n] = e1[-1]
    return out, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nz", type=int, default=201)
    ap.add_argument("--steps", type=int, default=300)
    ap.add_argument("--repeats", type=int, default=200)
    args = ap.parse_args()

    base = preset("single_lambda")
    config = replace(base, grid=Grid(args.nz, 2e7, args.steps, base.medium.L))
    results = {}
    for name in ("numba", "numpy"):
        kern = get_backend(name)
        per_step = time_step(name, config, args.repeats)
        trace, wall = run_exit(name, config, args.steps)
        results[kern.name] = trace
        print(f"{kern.name:>6}: {per_step * 1e6:9.1f} us/step   {args.steps} steps in {wall:.3f} s")
    if "numba" in results:
        diff = np.abs(results["numba"] - results["numpy"]).max()
        scale = np.abs(results["numpy"]).max()
        print(f"max |exit difference| = {diff:.3e} (relative {diff / scale:.3e})")
        s = time_step("numpy", config, 20) / time_step("numba", config, 20)
        print(f"speedup numba/numpy: {s:.1f}x")


if __name__ == "__main__":
    main()

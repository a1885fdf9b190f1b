#!/usr/bin/env python3
"""Compare the compiled kernels against the plain numpy engine path.

Runs shortened pentagon scenarios on both drivers, reports wall times,
speedup, and the worst trace deviation between the paths.

    python benchmarks/bench_jit.py [--horizon 5.0] [--repeat 3]
"""

import argparse
import time
from dataclasses import replace

import numpy as np

import formsim as fs
from formsim.accel import JIT_ENABLED


def time_driver(config, driver, repeat):
    eng = fs.Engine(config, driver=driver)
    if driver == "jit":  # compile outside the timed region
        eng.advance(eng.initial_state(), 0.0, 2)
    best = np.inf
    trace = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        trace = eng.run()
        best = min(best, time.perf_counter() - t0)
    return best, trace


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--horizon", type=float, default=5.0,
                        help="simulated seconds per run")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if not JIT_ENABLED:
        print("acceleration is disabled (numba missing or "
              "FORMSIM_DISABLE_JIT set); nothing to compare")
        return 1

    print(f"{'scenario':<22} {'numpy':>9} {'jit':>9} {'speedup':>8} "
          f"{'max deviation':>14}")
    for name in fs.preset_names():
        config = replace(fs.get_preset(name), t_final=args.horizon)
        t_np, trace_np = time_driver(config, "numpy", 1)
        t_jit, trace_jit = time_driver(config, "jit", args.repeat)
        dev = np.abs(trace_np.data - trace_jit.data).max()
        print(f"{name:<22} {t_np:>8.2f}s {t_jit:>8.2f}s "
              f"{t_np / t_jit:>7.1f}x {dev:>14.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

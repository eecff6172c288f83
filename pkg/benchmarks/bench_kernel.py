#!/usr/bin/env python3
"""Compare the compiled and pure-Python simulation kernels.

Runs the same seeded chains through both backends, checks the outputs are
bit-identical, and prints the speedup.

    python3 benchmarks/bench_kernel.py [--steps 20000]
"""

import argparse
import time

import numpy as np

import zhangpile._speed as speed
from zhangpile import ModelParams, RunConfig, simulate_stationary
from zhangpile._speed import backends


def time_backend(mod, cfg):
    original = speed.run_chain
    speed.run_chain = mod.run_chain
    try:
        t0 = time.perf_counter()
        stats = simulate_stationary(cfg)
        return time.perf_counter() - t0, stats
    finally:
        speed.run_chain = original


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20_000)
    args = ap.parse_args()

    cases = [
        ModelParams(n_sites=1, a=0.0, b=0.5),
        ModelParams(n_sites=10, a=0.5, b=1.0),
        ModelParams(n_sites=30, a=0.0, b=1.0),
    ]
    impls = backends()
    if "cython" not in impls:
        print("compiled kernel not built; only the python backend is available")
    print(f"{'case':<24}" + "".join(f"{name:>12}" for name in impls) + f"{'speedup':>10}")
    for params in cases:
        cfg = RunConfig(params=params, steps=args.steps, seed=12345)
        times = {}
        results = {}
        for name, mod in impls.items():
            times[name], results[name] = time_backend(mod, cfg)
        runs = list(results.values())
        for other in runs[1:]:
            assert np.array_equal(runs[0].histograms, other.histograms), "backends disagree"
            assert runs[0].mean_dissipated == other.mean_dissipated, "backends disagree"
        label = f"N={params.n_sites} [{params.a},{params.b}]"
        row = f"{label:<24}" + "".join(f"{times[name]:>11.3f}s" for name in impls)
        if len(times) == 2:
            tc, tp = times.get("cython"), times.get("python")
            row += f"{tp / tc:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()

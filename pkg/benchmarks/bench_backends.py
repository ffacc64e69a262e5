#!/usr/bin/env python3
"""Benchmark the compiled stepping kernel against the pure-python fallback.

Usage: python benchmarks/bench_backends.py [--steps N]

Both backends draw from the same counter-based generator and produce
bit-identical paths; the comparison is purely about throughput.
"""

import argparse
import time

import numpy as np

from cutlab import backend
from cutlab._rng import stream_key
from cutlab.chains import constant_drift_chain, poly_green_chain


def bench_kernel(mod, chain, n_steps, repeats=3):
    e = chain.e_array(max(4096, int(n_steps ** 0.75)))
    out = np.zeros(n_steps + 1, dtype=np.int32)
    key = stream_key(2026, 0)
    best = float("inf")
    steps_done = 0
    for _ in range(repeats):
        t0 = time.perf_counter()
        steps_done, reason = mod.bd_path(e, 0, n_steps, key, 0, -1, out)
        while reason == 2:  # grow the drift table and resume
            e = chain.e_array(2 * (e.shape[0] - 1))
            more, reason = mod.bd_path(e, int(out[steps_done]),
                                       n_steps - steps_done, key,
                                       steps_done, -1, out[steps_done:])
            steps_done += more
        best = min(best, time.perf_counter() - t0)
    return steps_done / best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=2 * 10 ** 6)
    args = parser.parse_args()

    impls = backend.backends()
    chains_ = {
        "constant(p=1/4)": constant_drift_chain(0.25),
        "poly_green(2,1)": poly_green_chain(2.0, 1.0),
    }
    print(f"active backend: {backend.IMPLEMENTATION}")
    print(f"{'chain':18s} " + " ".join(f"{n:>14s}" for n in impls))
    rates = {}
    for label, chain in chains_.items():
        row = []
        for name, mod in impls.items():
            # fallback gets a smaller workload to keep the run short
            steps = args.steps if name != "python" else max(args.steps // 20, 10 ** 5)
            rate = bench_kernel(mod, chain, steps)
            rates[name] = rate
            row.append(f"{rate / 1e6:10.1f}M/s")
        print(f"{label:18s} " + " ".join(f"{v:>14s}" for v in row))
    if len(rates) == 2:
        print(f"speedup (compiled / python): "
              f"{rates['cython'] / rates['python']:.0f}x")


if __name__ == "__main__":
    main()

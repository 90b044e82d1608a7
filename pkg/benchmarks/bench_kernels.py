#!/usr/bin/env python3
"""Benchmark the compiled conversion kernels against the numpy reference.

Usage:
    python benchmarks/bench_kernels.py [--words N] [--repeats R]

Both backends compute identical results (the test suite enforces
bit-equality); this script only measures throughput of the fused
element-wise conversion and the bare quantizer on large word batches.
"""

import argparse
import time

import numpy as np

from cimtile import kernels
from cimtile.kernels import pyref


def make_inputs(words, seed=0):
    rng = np.random.default_rng(seed)
    return {
        "a": rng.integers(0, 16, words).astype(np.uint8),
        "b": rng.integers(0, 16, words).astype(np.uint8),
        "na": rng.normal(0, 0.01, words),
        "nb": rng.normal(0, 0.01, words),
        "off": rng.integers(-3, 4, words).astype(np.int64),
        "cal": rng.integers(-3, 4, words).astype(np.int64),
        "crossings": rng.uniform(-2, 66, words),
    }


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--words", type=int, default=2_000_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    data = make_inputs(args.words)
    backends = [("pure-python", pyref)]
    if kernels.BACKEND == "compiled":
        backends.append(("compiled", kernels.get_backend("compiled")))
    else:
        print("note: compiled extension not built; timing the fallback only")

    cases = {
        "ewise_convert[mul]": lambda impl: impl.ewise_convert(
            data["a"], data["b"], True, data["na"], data["nb"],
            data["off"], data["cal"]),
        "ewise_convert[add]": lambda impl: impl.ewise_convert(
            data["a"], data["b"], False, data["na"], data["nb"],
            data["off"], data["cal"]),
        "quantize_counts": lambda impl: impl.quantize_counts(data["crossings"]),
    }

    print(f"words={args.words}  repeats={args.repeats}  (best time shown)")
    print(f"{'kernel':<20} {'backend':<12} {'seconds':>10} {'Mwords/s':>10}")
    reference = {}
    for case, runner in cases.items():
        for name, impl in backends:
            seconds = time_call(lambda: runner(impl), args.repeats)
            rate = args.words / seconds / 1e6
            print(f"{case:<20} {name:<12} {seconds:>10.4f} {rate:>10.1f}")
            if name == "pure-python":
                reference[case] = seconds
            else:
                speedup = reference[case] / seconds
                print(f"{'':<20} {'speedup':<12} {speedup:>10.2f}x")


if __name__ == "__main__":
    main()

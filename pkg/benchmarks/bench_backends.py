#!/usr/bin/env python3
"""Benchmark the numba kernel against the pure-numpy fallback.

The chi-MGF kernel dominates the Monte Carlo suites, so this times it on
representative argument mixes, plus one end-to-end sequential-path workload.

Usage: python benchmarks/bench_backends.py [--size 1000000] [--repeats 3]
"""

import argparse
import time

import numpy as np

from growstat import _kernels


def bench(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=1_000_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _kernels.log_chi_mgf_numba is None:
        print("numba backend unavailable (GROWSTAT_BACKEND=numpy or numba missing); "
              "timing the numpy path only")
    rng = np.random.default_rng(0)
    workloads = {
        "series (a in [0, 5])": rng.uniform(0.0, 5.0, args.size),
        "asymptotic (a in [10.5, 25])": rng.uniform(10.5, 25.0, args.size),
        "quadrature (a in [-5, 0])": rng.uniform(-5.0, 0.0, args.size),
        "mixed (a in [-5, 5])": rng.uniform(-5.0, 5.0, args.size),
    }
    k = 20

    # warm both paths (JIT compile, cache priming)
    probe = np.array([-2.0, 0.5, 11.0])
    _kernels.log_chi_mgf_numpy(k, probe)
    if _kernels.log_chi_mgf_numba is not None:
        _kernels.log_chi_mgf_numba(k, probe)

    print(f"log_chi_mgf over {args.size:,} points (k = {k}), best of {args.repeats}:")
    print(f"{'workload':34} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, arr in workloads.items():
        t_np = bench(_kernels.log_chi_mgf_numpy, k, arr, repeats=args.repeats)
        if _kernels.log_chi_mgf_numba is not None:
            t_nb = bench(_kernels.log_chi_mgf_numba, k, arr, repeats=args.repeats)
            out_np = _kernels.log_chi_mgf_numpy(k, arr[:1000])
            out_nb = _kernels.log_chi_mgf_numba(k, arr[:1000])
            assert np.max(np.abs(out_np - out_nb)) < 1e-11
            print(f"{name:34} {t_np:9.3f}s {t_nb:9.3f}s {t_np / t_nb:8.2f}x")
        else:
            print(f"{name:34} {t_np:9.3f}s {'-':>10} {'-':>9}")

    # end-to-end: null-stream e-process paths, 2_000 streams x horizon 100
    from growstat.verify import _ttest_log_evalue_paths
    z = rng.standard_normal((2_000, 100))
    t_path = bench(_ttest_log_evalue_paths, z, 0.0, 0.8, repeats=args.repeats)
    print(f"\nsequential paths (2000 x 100, backend={_kernels.BACKEND}): {t_path:.3f}s")


if __name__ == "__main__":
    main()

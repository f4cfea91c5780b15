#!/usr/bin/env python3
"""Benchmark the compiled Bessel core against the pure numpy fallback.

Run after building the extension (``pip install -e .`` or
``python setup.py build_ext --inplace``):

    python benchmarks/bench_bessel.py
"""

import time

import numpy as np

from mvmatern.specfun import _pure

try:
    from mvmatern.specfun import _core
except ImportError:
    _core = None


def bench(backend, nu, x, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        backend.kve_logscale(nu, x)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(20240901)
    workloads = [
        ("small x, low order", 0.7, 10 ** rng.uniform(-6, 0.3, 200_000)),
        ("mixed x, low order", 1.7, 10 ** rng.uniform(-4, 2.8, 200_000)),
        ("mixed x, order 12.3", 12.3, 10 ** rng.uniform(-4, 2.8, 200_000)),
        ("mixed x, order 55.1", 55.1, 10 ** rng.uniform(-2, 2.8, 200_000)),
        ("scalar loop (1000 calls)", 2.3, None),
    ]
    if _core is None:
        print("compiled core not built; showing pure backend only")
    header = f"{'workload':28s} {'pure':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for label, nu, x in workloads:
        if x is None:
            xs = 10 ** rng.uniform(-3, 2, 1000)
            t0 = time.perf_counter()
            for v in xs:
                _pure.kve_logscale(nu, float(v))
            t_pure = time.perf_counter() - t0
            t_core = None
            if _core is not None:
                t0 = time.perf_counter()
                for v in xs:
                    _core.kve_logscale(nu, float(v))
                t_core = time.perf_counter() - t0
        else:
            t_pure = bench(_pure, nu, x)
            t_core = bench(_core, nu, x) if _core is not None else None
        if t_core is None:
            print(f"{label:28s} {t_pure * 1e3:8.1f}ms {'-':>10s} {'-':>8s}")
        else:
            print(
                f"{label:28s} {t_pure * 1e3:8.1f}ms {t_core * 1e3:8.1f}ms "
                f"{t_pure / t_core:7.1f}x"
            )
    # agreement check between the two backends
    nu = 7.3
    x = 10 ** rng.uniform(-6, 2.8, 10_000)
    k1, l1 = _pure.kve_logscale(nu, x)
    if _core is not None:
        k2, l2 = _core.kve_logscale(nu, x)
        v1 = np.log(k1) + l1
        v2 = np.log(k2) + l2
        print(f"\nmax |log K| discrepancy pure vs compiled: "
              f"{np.max(np.abs(v1 - v2)):.3e}")


if __name__ == "__main__":
    main()

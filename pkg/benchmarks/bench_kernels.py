"""Compiled vs numpy backend on the two hot kernels.

    python benchmarks/bench_kernels.py [--nodes 200000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from leray import _kernels, _kernels_py


def rand(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng, N):
    # n=2 m=1 interpolation tube chart: D = 2n - 1 + m
    n, D = 2, 4
    e, de, w, dz = rand(rng, N, n), rand(rng, N, n, D), rand(rng, N, n), rand(rng, N, n, D)
    pre = rand(rng, N, D - (n - 1) - n, D)
    A, dA = rand(rng, N, n), rand(rng, N, n, D)
    mu0, dmu0 = rng.uniform(size=N), rng.normal(size=(N, D))
    yield "cf_density n=2 m=1", (e, de, w, dz, pre, A, dA, mu0, dmu0, True), "cf_density"
    # n=3 Martineau level chart: omega'_0(eta') ^ dz, D = 5
    n, D = 3, 5
    yield "leray_density n=3", (rand(rng, N, n), rand(rng, N, n, D), rand(rng, N, 0, D), rand(rng, N, n, D)), \
        "leray_density"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numpy us/node':>15}{'compiled us/node':>18}{'speedup':>10}")
    for label, a, name in cases(rng, args.nodes):
        tp = best(lambda: getattr(_kernels_py, name)(*a), args.repeat)
        tc = best(lambda: getattr(_kernels, name)(*a), args.repeat)
        ref, got = getattr(_kernels_py, name)(*a), getattr(_kernels, name)(*a)
        assert np.allclose(ref, got, rtol=1e-9, atol=1e-9 * np.max(np.abs(ref)))
        scale = 1e6 / args.nodes
        print(f"{label:<22}{tp * scale:>15.3f}{tc * scale:>18.3f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Benchmark the phase-sum backends and the grid evaluation strategies.

The compiled kernel wins when the number of right-hand sides is small (the
per-node sincos beats building the full phase matrix); the numpy fallback
catches up once the matrix is reused across many right-hand sides.  The
second table times the exact chirp-transform grid path against direct
summation on the d=2 reference scenario, where the speedup is what makes
the sub-second normalization budget possible.

Run:  python benchmarks/bench_phase_sum.py
"""

import time

import numpy as np

from eventloc._accel import available_backends, get_backend


def _time(fn, *args, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backends() -> None:
    rng = np.random.default_rng(0)
    cases = [
        ("small probe set", 2048, 2, 4, 20),
        ("d=2 node load", 12288, 2, 4, 200),
        ("many points", 4096, 3, 8, 2000),
    ]
    print(f"{'case':<16} {'nodes':>6} {'rhs':>4} {'points':>7}", end="")
    names = available_backends()
    for name in names:
        print(f" {name:>10}", end="")
    print()
    for label, n_q, dim, n_rhs, n_x in cases:
        k = rng.normal(size=(n_q, dim))
        amps = rng.normal(size=(n_rhs, n_q)) + 1j * rng.normal(size=(n_rhs, n_q))
        x = rng.normal(size=(n_x, dim))
        print(f"{label:<16} {n_q:>6} {n_rhs:>4} {n_x:>7}", end="")
        ref = None
        for name in names:
            impl = get_backend(name)
            out = impl.phase_sum(k, amps, x)
            if ref is None:
                ref = out
            else:
                assert np.abs(out - ref).max() < 1e-10 * np.abs(ref).max()
            print(f" {_time(impl.phase_sum, k, amps, x):>9.3f}s", end="")
        print()


def bench_grid_strategies() -> None:
    from eventloc.engine import evaluate_field
    from eventloc.scenario import load_scenario

    built = load_scenario("d2_reference").build()
    print("\nd=2 reference grid evaluation")
    for strategy in ("fft", "direct"):
        dt = _time(evaluate_field, built.state, built.kernel, built.domain, strategy, repeats=1)
        print(f"  strategy={strategy:<7} {dt:>7.2f}s")


if __name__ == "__main__":
    bench_backends()
    bench_grid_strategies()

#!/usr/bin/env python3
"""Benchmark the compiled split-scan kernel against the numpy fallback.

Times both the raw node scan and a full gbdt training run, checks that the
two implementations return bit-identical results, and prints the speedups.

    python benchmarks/bench_split_kernel.py [--n 200000] [--d 18] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ruinscore.meta import _kernels, _split_np
from ruinscore.meta import TrainHyper, model_to_json, train_gbdt

try:
    from ruinscore.meta import _split_cy
except ImportError:
    _split_cy = None


def make_node(n: int, d: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 256, size=(n, d)).astype(np.float64)
    order = np.argsort(x, axis=0, kind="stable")
    xs = np.ascontiguousarray(np.take_along_axis(x, order, axis=0))
    g = rng.standard_normal(n)
    h = rng.random(n) + 0.01
    gs = np.ascontiguousarray(g[order])
    hs = np.ascontiguousarray(h[order])
    return xs, gs, hs


def time_fn(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_scan(n: int, d: int, repeat: int) -> None:
    xs, gs, hs = make_node(n, d)
    result_np = _split_np.best_split(xs, gs, hs, 1.0, 5)
    t_np = time_fn(lambda: _split_np.best_split(xs, gs, hs, 1.0, 5), repeat)
    print(f"node scan ({n} x {d}):")
    print(f"  numpy fallback   {t_np * 1e3:8.2f} ms   -> {result_np}")
    if _split_cy is None:
        print("  compiled kernel  not built (pip install -e . rebuilds it)")
        return
    result_cy = _split_cy.best_split(xs, gs, hs, 1.0, 5)
    assert result_np == result_cy, "kernels disagree!"
    t_cy = time_fn(lambda: _split_cy.best_split(xs, gs, hs, 1.0, 5), repeat)
    print(f"  compiled kernel  {t_cy * 1e3:8.2f} ms   -> {result_cy}")
    print(f"  speedup          {t_np / t_cy:8.2f} x   (results bit-identical)")


def bench_training(n: int, repeat: int) -> None:
    rng = np.random.default_rng(7)
    X = rng.integers(0, 32, size=(n, 18)).astype(np.float64)
    y = rng.integers(0, 4, size=n).tolist()
    hyper = TrainHyper()

    def with_impl(impl):
        saved = _kernels._impl
        _kernels._impl = impl
        try:
            return train_gbdt(X, y, hyper)
        finally:
            _kernels._impl = saved

    model_np = with_impl(_split_np)
    t_np = time_fn(lambda: with_impl(_split_np), repeat)
    print(f"train_gbdt (n={n}, 50 rounds x 4 classes, depth 3):")
    print(f"  numpy fallback   {t_np:8.2f} s")
    if _split_cy is None:
        return
    model_cy = with_impl(_split_cy)
    assert model_to_json(model_np) == model_to_json(model_cy), "trained models differ!"
    t_cy = time_fn(lambda: with_impl(_split_cy), repeat)
    print(f"  compiled kernel  {t_cy:8.2f} s")
    print(f"  speedup          {t_np / t_cy:8.2f} x   (models bit-identical)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200_000, help="samples in the scan node")
    parser.add_argument("--d", type=int, default=18, help="features")
    parser.add_argument("--train-n", type=int, default=5_000, help="training set size")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    print(f"active kernel at import: {_kernels.backend_name()}")
    bench_scan(args.n, args.d, args.repeat)
    print()
    bench_training(args.train_n, max(1, args.repeat // 2))


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Timing comparison of the compiled kernels against the numpy fallback.

Run from the repo root after an editable install:

    python benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeat 30]

Both backends compute identical results (tests/test_kernels.py asserts bit
equality); this script only measures the speed difference and a realistic
end-to-end case (fitting one decision tree) under each backend.
"""

import argparse
import timeit

import numpy as np

from fairnoise import _pykern

try:
    from fairnoise import _ckern
except ImportError:
    _ckern = None


def _split_inputs(n, rng):
    values = np.sort(rng.normal(size=n))
    weight = np.ones(n)
    pos = (rng.random(n) < 0.4).astype(np.float64)
    return values, pos, weight


def _cell_inputs(n, rng):
    return (rng.integers(0, 2, n), rng.integers(0, 2, n), rng.random(n))


def _replace_inputs(n, rng):
    codes = rng.integers(0, 6, n)
    weights = rng.random(6) + 0.05
    cdf = np.cumsum(weights / weights.sum())
    return codes, cdf, rng.random(n), rng.random(n), 0.4


KERNELS = {
    "best_split": _split_inputs,
    "cell_sums": _cell_inputs,
    "discrete_replace": _replace_inputs,
}


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for name, make in KERNELS.items():
        for n in sizes:
            args = make(n, rng)
            t_py = min(timeit.repeat(lambda: getattr(_pykern, name)(*args),
                                     number=1, repeat=repeat))
            if _ckern is None:
                rows.append((name, n, t_py, None))
                continue
            t_cy = min(timeit.repeat(lambda: getattr(_ckern, name)(*args),
                                     number=1, repeat=repeat))
            rows.append((name, n, t_py, t_cy))
    return rows


def bench_tree(repeat):
    """End-to-end: one tree fit, which hammers best_split."""
    import fairnoise.models.tree as tree_mod
    from fairnoise.dataset import synth_biased
    from fairnoise.models import train

    ds = synth_biased(20000, 1.0, 0.5, seed=5)
    results = {}
    for label, impl in (("python", _pykern), ("compiled", _ckern)):
        if impl is None:
            continue
        original = tree_mod.kernels
        tree_mod.kernels = impl
        try:
            results[label] = min(timeit.repeat(
                lambda: train(ds, "decision_tree", seed=0), number=1, repeat=repeat))
        finally:
            tree_mod.kernels = original
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="1000,10000,100000")
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--tree-repeat", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _ckern is None:
        print("compiled extension not available; timing the fallback only\n")

    print(f"{'kernel':<18} {'n':>8} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for name, n, t_py, t_cy in bench_kernels(sizes, args.repeat):
        if t_cy is None:
            print(f"{name:<18} {n:>8} {t_py * 1e6:>10.1f}us {'-':>12} {'-':>9}")
        else:
            print(f"{name:<18} {n:>8} {t_py * 1e6:>10.1f}us {t_cy * 1e6:>10.1f}us "
                  f"{t_py / t_cy:>8.1f}x")

    tree = bench_tree(args.tree_repeat)
    if tree:
        print("\ndecision tree fit, 20k rows (uses best_split per node x feature):")
        for label, seconds in tree.items():
            print(f"  {label:<9} {seconds:.3f}s")
        if len(tree) == 2:
            print(f"  speedup   {tree['python'] / tree['compiled']:.1f}x")


if __name__ == "__main__":
    main()

"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each row also checks that both backends agree bit for bit on the timed input.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from covsem.kernels import available_backends


def _tree(capacity, rng):
    leaf = 1 << (capacity - 1).bit_length()
    tree = np.zeros(2 * leaf)
    tree[leaf:leaf + capacity] = rng.random(capacity)
    for j in range(leaf - 1, 0, -1):
        tree[j] = tree[2 * j] + tree[2 * j + 1]
    return tree, leaf


def cases(rng):
    tree, leaf = _tree(10_000, rng)
    targets = rng.random(64) * tree[1]
    idx = rng.integers(0, 10_000, size=64)
    vals = rng.random(64)
    sim = np.clip(rng.normal(size=(16, 16)), -1, 1)
    recv = (rng.random(16) < 0.5).astype(np.uint8)
    n = 76 * 128 + 128 * 128
    g = rng.normal(size=n)
    online = rng.normal(size=n)

    def tree_set(k):
        t = tree.copy()
        def run():
            for i, v in zip(idx, vals):
                k.tree_set(t, leaf, int(i), float(v))
            return t
        return run

    def tree_find(k):
        return lambda: k.tree_find(tree, leaf, targets, 10_000)

    def nearest_mean(k):
        return lambda: k.nearest_mean(sim, recv)

    def adam(k):
        p, m, v = np.zeros(n), np.zeros(n), np.zeros(n)
        def run():
            k.adam_update(p, g, m, v, 3e-4, 0.9, 0.999, 0.1, 0.001, 1e-8)
            return p
        return run

    def soft(k):
        t = np.zeros(n)
        def run():
            k.soft_update(t, online, 0.005)
            return t
        return run

    return {"tree_set x64": tree_set, "tree_find batch64": tree_find, "nearest_mean K=16": nearest_mean,
            "adam_update 26k": adam, "soft_update 26k": soft}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args(argv)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the fallback is timed")
    names = list(backends)
    print(f"{'kernel':<20}" + "".join(f"{b + ' us':>14}" for b in names) + f"{'speedup':>10}{'identical':>11}")
    for label, make in cases(np.random.default_rng(0)).items():
        times, outs = {}, {}
        for b in names:
            outs[b] = np.copy(make(backends[b])())
            fn = make(backends[b])
            times[b] = min(timeit.repeat(fn, number=args.repeat // 10 or 1, repeat=5)) / (args.repeat // 10 or 1) * 1e6
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        same = all(np.array_equal(outs[names[0]], o) for o in outs.values())
        print(f"{label:<20}" + "".join(f"{times[b]:>14.2f}" for b in names) + f"{speed:>10.1f}x{str(same):>10}")


if __name__ == "__main__":
    main()

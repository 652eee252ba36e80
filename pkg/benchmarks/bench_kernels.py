"""Compiled vs pure-Python kernels: CPU time per original sample.

    python benchmarks/bench_kernels.py [--budget 200000] [--repeat 3]

Both backends run the same chains from the same seeds (their outputs are
bit-identical, which the script checks), so the ratio is a like-for-like
speedup.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pnsampler import models
from pnsampler.continuous import DonutsModel
from pnsampler.kernels import backend_module
from pnsampler.schemes import systematic_index_set


def cases(budget: int):
    tri = models.triangle()
    qubo = models.make_qubo_random(16, 10.0, seed=0)
    bits = np.random.default_rng(0).integers(0, 2, 16).astype(np.uint8)
    full = np.arange(16)[None]
    sets = np.stack([systematic_index_set(16, 8, i) for i in range(2)])
    donuts = DonutsModel()

    def qt(K):
        return K.QuboTarget(qubo._off, qubo._diag, bits)

    def tt(K):
        return K.TableTarget(tri.targets, tri.qprop, tri.log_weights, 0)

    return {
        "triangle rf": lambda K, g: K.rf_chain(tt(K), g, budget, np.array([[0, 1, 2]]), budget + 1),
        "qubo16 mh": lambda K, g: K.mh_chain(qt(K), g, budget, full, budget + 1),
        "qubo16 rf": lambda K, g: K.rf_chain(qt(K), g, budget, full, budget + 1),
        "qubo16 unbiased pns": lambda K, g: K.rf_chain(qt(K), g, budget, sets, 100, 0, True),
        "qubo16 basic pns": lambda K, g: K.basic_pns_chain(qt(K), g, budget, 8),
        "qubo16 opt pns": lambda K, g: K.opt_run(qt(K), g, budget // 10, 8),
        "donuts pns": lambda K, g: K.pns_continuous(K.DonutsTarget(donuts.mu0, donuts.sigma), g, [3.0, 0.0], 25, 1000, budget),
    }


def best_of(fn, K, repeat: int):
    best, out = float("inf"), None
    for _ in range(repeat):
        g = np.random.default_rng(1)
        t0 = time.process_time()
        out = fn(K, g)
        best = min(best, time.process_time() - t0)
    return best, out


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, dict):
        return a == b
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--budget", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    py = backend_module("python")
    try:
        cy = backend_module("cython")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")

    print(f"budget {args.budget}, best of {args.repeat}")
    print(f"{'kernel':<22}{'python s':>10}{'cython s':>10}{'speedup':>9}{'ns/sample':>11}  identical")
    for name, fn in cases(args.budget).items():
        tp, op = best_of(fn, py, 1)
        tc, oc = best_of(fn, cy, args.repeat)
        n = args.budget // 10 if "opt" in name else args.budget
        print(f"{name:<22}{tp:>10.3f}{tc:>10.4f}{tp / tc:>9.1f}{1e9 * tc / n:>11.1f}  {same(op, oc)}")


if __name__ == "__main__":
    main()

"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Times the double and double-double Gram-Schmidt passes that build a basis
and the sequential sampler, and reports the largest output difference
between backends.
"""
import argparse
import time

import numpy as np

from ump import PeriodicGrid, Potential, build_basis
from ump import _kernels_py as py
from ump.opuc import _dd_grid_tables, _family_dd
from ump.sampler import _features

try:
    from ump import _kernels as cy
except ImportError:
    cy = None


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n_double=24, n_dd=48, n_sample=16, draws=50):
    p = Potential.cosine(0.5)
    grid = PeriodicGrid(4096)
    sw = np.exp(0.5 * n_double * 0.5 * np.cos(grid.nodes))
    fam = np.exp(1j * np.multiply.outer(np.arange(n_double + 1), grid.nodes)) * sw
    rh, rl, ih, il = _family_dd(p, n_dd, grid.M)
    _, (hh, hl) = _dd_grid_tables(grid.M)
    phi, coeffs, freqs = _features(_evaluator(p, n_sample, grid))
    u = np.random.default_rng(0).random((draws, n_sample))

    def sampler(k):
        return lambda: np.stack([k.dpp_sample(phi, coeffs, freqs, row, grid.nodes, grid.h)[0]
                                 for row in u])

    return {
        f"mgs double n={n_double}": lambda k: (lambda: k.mgs_reorth(fam, grid.h)[0]),
        f"mgs double-double n={n_dd}": lambda k: (lambda: k.mgs_reorth_dd(rh, rl, ih, il, hh, hl)[0]),
        f"dpp sample n={n_sample} x{draws}": sampler,
    }


def _evaluator(p, n, grid):
    from ump import KernelEvaluator

    return KernelEvaluator(build_basis(p, n, grid, mode="auto"))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if cy is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'case':32s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s} {'max diff':>9s}")
    for name, make in cases().items():
        tp, op = best_of(make(py), args.repeat)
        if cy is None:
            print(f"{name:32s} {tp:10.4f}")
            continue
        tc, oc = best_of(make(cy), args.repeat)
        diff = float(np.max(np.abs(op - oc)))
        print(f"{name:32s} {tp:10.4f} {tc:10.4f} {tp / tc:8.2f} {diff:9.1e}")


if __name__ == "__main__":
    main()

"""Exact eigenvalue sampling from the rank-``n`` projection kernel, plus
histogram statistics to cross-check the one- and two-point densities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import NumericalBreakdown, TooFewSamples
from .io import csv_text
from .kernel import KernelEvaluator

#: Recorded in manifests so other implementations can reproduce the streams.
RNG_NAME = "numpy.random.Philox"
MIN_SAMPLES = 100


@dataclass(frozen=True)
class EigenvalueSample:
    angles: np.ndarray
    seed: int
    n: int
    stream: int = 0
    min_conditional_density: float = 0.0

    def __post_init__(self):
        if self.angles.shape != (self.n,):
            raise ValueError("a sample holds exactly n points")
        if np.any(self.angles < -np.pi) or np.any(self.angles >= np.pi):
            raise ValueError("angles must lie in [-pi, pi)")


def _generator(seed: int, stream: int) -> np.random.Generator:
    # disjoint streams: the stream index occupies the top counter word
    key = int(seed) % (1 << 64)
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, int(stream)]))


def _features(ev: KernelEvaluator):
    interp = ev.basis.interpolant
    phi = np.ascontiguousarray(ev.basis.psi[: ev.n].T)
    coeffs = np.ascontiguousarray(interp.coeffs[: ev.n].T.conj().T)
    return phi, coeffs, np.ascontiguousarray(interp.freqs)


def sample_eigenvalues(ev: KernelEvaluator, seed: int, stream: int = 0,
                       backend=None) -> EigenvalueSample:
    """Draw one configuration of ``n`` angles by sequential conditioning."""
    k = _backend.get_kernels(backend)
    phi, coeffs, freqs = _features(ev)
    u = _generator(seed, stream).random(ev.n)
    grid = ev.grid
    pts, min_dens, count = k.dpp_sample(phi, coeffs, freqs, u, grid.nodes, grid.h)
    if count < ev.n:
        raise NumericalBreakdown(
            f"conditional density at step {count} integrates to below 1e-12 of its expected mass")
    return EigenvalueSample(np.asarray(pts, float), int(seed), ev.n, int(stream),
                            float(min_dens))


def sample_batch(ev: KernelEvaluator, seed: int, count: int, backend=None):
    """``count`` independent samples; sample ``i`` uses stream ``i`` of ``seed``."""
    return [sample_eigenvalues(ev, seed, i, backend) for i in range(int(count))]


def samples_csv(samples) -> str:
    rows = [[s, i, a] for s, smp in enumerate(samples) for i, a in enumerate(smp.angles)]
    return csv_text(["sample_id", "point_index", "angle"], rows)


@dataclass
class EmpiricalStats:
    edges: np.ndarray
    one_point: np.ndarray
    one_point_se: np.ndarray
    lag_edges: np.ndarray
    pair_ratio: np.ndarray
    pair_ratio_se: np.ndarray
    count: int

    def bin_average(self, ev: KernelEvaluator, per_bin=64):
        """Average of ``rho_n`` over each histogram bin."""
        out = np.empty(len(self.edges) - 1)
        for b, (a, c) in enumerate(zip(self.edges[:-1], self.edges[1:])):
            x = np.linspace(a, c, per_bin + 1)
            out[b] = np.trapezoid(ev.density(x), x) / (c - a)
        return out

    def max_standard_score(self, ev: KernelEvaluator) -> float:
        diff = np.abs(self.one_point - self.bin_average(ev))
        return float(np.max(diff / self.one_point_se))

    def to_dict(self):
        return {
            "count": self.count,
            "edges": self.edges.tolist(),
            "one_point": self.one_point.tolist(),
            "one_point_se": self.one_point_se.tolist(),
            "lag_edges": self.lag_edges.tolist(),
            "pair_ratio": self.pair_ratio.tolist(),
            "pair_ratio_se": self.pair_ratio_se.tolist(),
        }


def empirical_stats(samples, bins: int = 32, lag_bins: int | None = None) -> EmpiricalStats:
    """One-point density histogram and pair-distance histogram relative to
    independent uniform points, each with standard errors from the spread of
    per-sample counts."""
    if len(samples) < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {len(samples)}")
    lag_bins = bins if lag_bins is None else lag_bins
    X = np.stack([s.angles for s in samples])
    N, n = X.shape
    edges = np.linspace(-np.pi, np.pi, bins + 1)
    width = np.diff(edges)
    idx = np.clip(np.searchsorted(edges, X, side="right") - 1, 0, bins - 1)
    per = np.zeros((N, bins))
    np.add.at(per, (np.repeat(np.arange(N), n), idx.ravel()), 1.0)
    frac = per / n
    one = frac.mean(axis=0) / width
    one_se = frac.std(axis=0, ddof=1) / np.sqrt(N) / width

    lag_edges = np.linspace(0.0, np.pi, lag_bins + 1)
    d = np.abs(X[:, :, None] - X[:, None, :])
    d = np.minimum(d, 2 * np.pi - d)
    iu = np.triu_indices(n, 1)
    d = d[:, iu[0], iu[1]]
    lidx = np.clip(np.searchsorted(lag_edges, d, side="right") - 1, 0, lag_bins - 1)
    lper = np.zeros((N, lag_bins))
    np.add.at(lper, (np.repeat(np.arange(N), d.shape[1]), lidx.ravel()), 1.0)
    ref = d.shape[1] * np.diff(lag_edges) / np.pi
    ratio = lper / ref
    return EmpiricalStats(edges, one, one_se, lag_edges, ratio.mean(axis=0),
                          ratio.std(axis=0, ddof=1) / np.sqrt(N), N)


__all__ = [
    "EigenvalueSample",
    "EmpiricalStats",
    "RNG_NAME",
    "empirical_stats",
    "sample_batch",
    "sample_eigenvalues",
    "samples_csv",
]

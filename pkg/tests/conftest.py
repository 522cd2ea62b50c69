import functools
import os

import pytest

from ump import KernelEvaluator, Potential, build_basis
from ump.quadrature import PeriodicGrid, default_grid_size

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def evaluator(kind: str, n: int, t: float = 0.5, M: int | None = None) -> KernelEvaluator:
    p = Potential.zero() if kind == "zero" else Potential.cosine(t)
    grid = PeriodicGrid(M or default_grid_size(n))
    return KernelEvaluator(build_basis(p, n, grid, mode="auto"))


@functools.lru_cache(maxsize=None)
def batch(kind: str, n: int, count: int, seed: int = 0, t: float = 0.5):
    """Sampled configurations, shared between the sampler and acceptance tests."""
    from ump.sampler import sample_batch

    return tuple(sample_batch(evaluator(kind, n, t), seed, count))


@pytest.fixture
def ev():
    return evaluator


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("UMP_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "ump-cache"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import numpy as np
import pytest

from ump import PeriodicGrid, Potential
from ump.cache import FORMAT_VERSION, cache_dir, cache_key, cached_basis
from ump.errors import PrecisionExceeded

COS = Potential.cosine(0.5)
GRID = PeriodicGrid(512)


def test_key_stability_and_sensitivity():
    k = cache_key(COS, 16, 512, "double")
    assert k == cache_key(Potential.cosine(0.5), 16, 512, "double")
    others = {
        cache_key(Potential.cosine(0.25), 16, 512, "double"),
        cache_key(Potential.zero(), 16, 512, "double"),
        cache_key(COS, 17, 512, "double"),
        cache_key(COS, 16, 1024, "double"),
        cache_key(COS, 16, 512, "extended"),
    }
    assert k not in others and len(others) == 5
    assert FORMAT_VERSION >= 1


def test_cache_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("UMP_CACHE_DIR", str(tmp_path))
    assert cache_dir() == tmp_path


def test_hit_after_miss(tmp_path):
    a, hit_a = cached_basis(COS, 16, GRID, directory=tmp_path)
    b, hit_b = cached_basis(COS, 16, GRID, directory=tmp_path)
    assert (hit_a, hit_b) == (False, True)
    assert a.psi.tobytes() == b.psi.tobytes()
    assert np.array_equal(a.gamma, b.gamma)
    assert b.mode == a.mode == "double"
    assert not b.psi.flags.writeable


def test_corrupted_cache_rebuilt(tmp_path):
    cached_basis(COS, 16, GRID, directory=tmp_path)
    (path,) = tmp_path.glob("basis-*.npz")
    with np.load(path) as z:
        data = dict(z)
    data["psi"] = data["psi"] * 1.001  # breaks orthonormality
    np.savez(path, **data)
    b, hit = cached_basis(COS, 16, GRID, directory=tmp_path)
    assert not hit
    assert b.orthonormality_residual <= 1e-10
    _, hit = cached_basis(COS, 16, GRID, directory=tmp_path)
    assert hit


def test_truncated_cache_rebuilt(tmp_path):
    cached_basis(COS, 16, GRID, directory=tmp_path)
    (path,) = tmp_path.glob("basis-*.npz")
    path.write_bytes(path.read_bytes()[:100])
    _, hit = cached_basis(COS, 16, GRID, directory=tmp_path)
    assert not hit


def test_budget_checked_before_cache(tmp_path):
    with pytest.raises(PrecisionExceeded):
        cached_basis(COS, 64, PeriodicGrid(2048), mode="double", directory=tmp_path)
    assert not list(tmp_path.glob("*.npz"))

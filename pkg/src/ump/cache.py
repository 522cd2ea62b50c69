"""On-disk cache of orthonormal bases keyed by a content hash."""
from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import zipfile
from pathlib import Path

import numpy as np

from .io import atomic_write_bytes
from .opuc import ORTHO_TOL, OrthonormalBasis, build_basis, gram_residual, resolve_mode
from .potential import Potential, check_budget
from .quadrature import PeriodicGrid

log = logging.getLogger(__name__)

#: Bumping this invalidates every cached basis.
FORMAT_VERSION = 1


def cache_dir() -> Path:
    env = os.environ.get("UMP_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "ump"


def cache_key(p: Potential, n: int, M: int, mode: str) -> str:
    payload = {
        "format_version": FORMAT_VERSION,
        "potential": p.descriptor(),
        "n": int(n),
        "M": int(M),
        "mode": mode,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _serialize(b: OrthonormalBasis, key: str) -> bytes:
    buf = io.BytesIO()
    np.savez(buf, psi=b.psi, gamma=b.gamma, rdiag=b.rdiag,
             residual=np.float64(b.orthonormality_residual), key=np.array(key))
    return buf.getvalue()


def _load(path: Path, p: Potential, n: int, grid: PeriodicGrid, mode: str, key: str):
    try:
        with np.load(path, allow_pickle=False) as z:
            if str(z["key"]) != key:
                return None
            psi = np.array(z["psi"])
            gamma = np.array(z["gamma"])
            rdiag = np.array(z["rdiag"])
    except (OSError, ValueError, KeyError, EOFError, zipfile.BadZipFile) as exc:
        log.warning("unreadable cache file %s: %s", path, exc)
        return None
    if psi.shape != (n + 1, grid.M):
        return None
    resid = gram_residual(psi, grid.h)
    if not resid <= ORTHO_TOL:
        log.warning("cached basis %s has residual %.2e; rebuilding", path.name, resid)
        return None
    psi.flags.writeable = False
    return OrthonormalBasis(p, n, grid, mode, psi, gamma, resid, rdiag)


def cached_basis(p: Potential, n: int, grid: PeriodicGrid, mode: str = "auto",
                 directory: Path | None = None, backend=None):
    """Return ``(basis, cache_hit)``; builds and stores on a miss."""
    mode = resolve_mode(p, n, mode)
    check_budget(p, n, mode)
    directory = Path(directory) if directory is not None else cache_dir()
    key = cache_key(p, n, grid.M, mode)
    path = directory / f"basis-{key[:32]}.npz"
    if path.exists():
        b = _load(path, p, n, grid, mode, key)
        if b is not None:
            return b, True
    b = build_basis(p, n, grid, mode=mode, backend=backend)
    atomic_write_bytes(path, _serialize(b, key))
    return b, False

"""Orthonormal functions on the unit circle with the varying weight exp(-nV).

``psi_k = P_k exp(-nV/2)`` where ``P_k`` is a polynomial in ``exp(i lambda)``
of exact degree ``k``. They are produced by modified Gram-Schmidt with one
re-orthogonalization pass on the sampled family ``exp(i k lambda - nV/2)``,
either in double precision or in double-double arithmetic.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import ConfigInvalid, OrthogonalityLoss
from .potential import PRECISION_BUDGETS, Potential, check_budget, eval_potential
from .quadrature import PeriodicGrid, TrigInterpolant

log = logging.getLogger(__name__)

ORTHO_TOL = 1e-8
MODES = ("double", "extended")


def resolve_mode(p: Potential, n: int, mode: str) -> str:
    """Map ``"auto"`` to the cheapest mode whose budget admits ``p`` at ``n``."""
    if mode in MODES:
        return mode
    if mode != "auto":
        raise ConfigInvalid(f"unknown precision mode {mode!r}")
    return "double" if p.dynamic_range(n) <= PRECISION_BUDGETS["double"] else "extended"


@functools.lru_cache(maxsize=8)
def _dd_grid_tables(M: int):
    """Exact-to-double-double ``exp(2 pi i m / M)`` table and step ``2 pi / M``."""
    import mpmath as mp

    with mp.workdps(40):
        tw = [mp.mpf(2) * mp.pi * m / M for m in range(M)]
        c = [mp.cos(t) for t in tw]
        s = [mp.sin(t) for t in tw]
        ch = np.array([float(v) for v in c])
        cl = np.array([float(v - mp.mpf(float(v))) for v in c])
        sh = np.array([float(v) for v in s])
        sl = np.array([float(v - mp.mpf(float(v))) for v in s])
        h = 2 * mp.pi / M
        hh = float(h)
        hl = float(h - mp.mpf(hh))
    return (ch, cl, sh, sl), (hh, hl)


def _dd_sqrt_weight(p: Potential, n: int, M: int):
    """``exp(-n V / 2)`` at the exact nodes as a double-double pair."""
    import mpmath as mp

    a = p.cos_coefficients
    hi = np.empty(M)
    lo = np.empty(M)
    with mp.workdps(40):
        for j in range(M):
            lam = -mp.pi + 2 * mp.pi * j / M
            v = mp.fsum(mp.mpf(float(am)) * mp.cos((m + 1) * lam) for m, am in enumerate(a))
            w = mp.exp(-n * v / 2)
            hi[j] = float(w)
            lo[j] = float(w - mp.mpf(hi[j]))
    return hi, lo


def _family_dd(p: Potential, n: int, M: int):
    """Rows ``exp(i k lambda_j) exp(-n V(lambda_j) / 2)``, k = 0..n, in double-double."""
    from ._kernels_py import dd_mul

    (ch, cl, sh, sl), _ = _dd_grid_tables(M)
    wh, wl = _dd_sqrt_weight(p, n, M)
    j = np.arange(M)
    shape = (n + 1, M)
    rh, rl, ih, il = (np.empty(shape) for _ in range(4))
    for kk in range(n + 1):
        idx = (j * kk) % M
        sign = -1.0 if kk % 2 else 1.0  # exp(i k (-pi)) = (-1)^k
        rh[kk], rl[kk] = dd_mul(sign * ch[idx], sign * cl[idx], wh, wl)
        ih[kk], il[kk] = dd_mul(sign * sh[idx], sign * sl[idx], wh, wl)
    return rh, rl, ih, il


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Grid samples of ``psi_0 .. psi_n`` (rows of ``psi``)."""

    potential: Potential
    n: int
    grid: PeriodicGrid
    mode: str
    psi: np.ndarray
    gamma: np.ndarray
    orthonormality_residual: float
    rdiag: np.ndarray = field(default=None, repr=False)

    @functools.cached_property
    def sqrt_weight(self):
        return np.exp(-0.5 * self.n * eval_potential(self.potential, self.grid.nodes))

    @functools.cached_property
    def weight_band(self) -> int:
        """Bandwidth of ``exp(-nV/2)`` needed for off-grid evaluation; zero for
        the flat weight. See :func:`weight_band`."""
        return weight_band(self.potential, self.n)

    @functools.cached_property
    def interpolant(self) -> TrigInterpolant:
        bw = self.weight_band
        return TrigInterpolant(self.grid, self.psi, mode_range=(-bw, self.n + bw))

    def psi_at(self, x):
        """``psi_k(x)`` for k = 0..n at arbitrary angles; shape ``(n+1,) + x.shape``."""
        return self.interpolant(x)

    def gram(self):
        return self.grid.h * (self.psi @ self.psi.conj().T)


def weight_band(p: Potential, n: int, rel_tol: float = 1e-17) -> int:
    """Number of Fourier modes of ``s = exp(-nV/2)`` to keep so that the
    discarded tail is below ``rel_tol * min s`` (``s`` scaled to max 1).

    ``psi_k = P_k s`` with ``|P_k|`` as large as ``1 / min s``, so the tail must
    be small against the smallest weight value, not the largest. The tail is
    bounded by shifting the contour to ``Im lambda = y``:
    ``|c_k| <= exp(G(y) - |k| y)`` with ``G(y) = max_x Re(-nV(x + iy)/2)``.
    Everything is done in log space, so the bound sees far below the double
    precision floor of an FFT.
    """
    a = p.cos_coefficients
    if a.size == 0 or not np.any(a):
        return 0
    m = np.arange(1, a.size + 1)
    x = np.linspace(-np.pi, np.pi, 2048, endpoint=False)
    cosmx = np.cos(np.outer(x, m))
    g0 = -0.5 * n * (cosmx @ a)
    top = g0.max()
    log_target = np.log(rel_tol) + (g0.min() - top)
    best = np.inf
    for y in np.linspace(0.02, 8.0, 400):
        G = np.max(-0.5 * n * (cosmx @ (a * np.cosh(m * y)))) - top
        B = (G - log_target - np.log1p(-np.exp(-y))) / y
        best = min(best, B)
    return int(np.ceil(best))


def gram_residual(psi, h):
    G = h * (psi @ psi.conj().T)
    return float(np.max(np.abs(G - np.eye(psi.shape[0]))))


def leading_coefficients(psi, p: Potential, n: int, grid: PeriodicGrid):
    """Coefficient of ``exp(i l lambda)`` in ``psi_l exp(nV/2)`` by discrete
    Fourier projection (complex)."""
    inv_sqrt_w = np.exp(0.5 * n * eval_potential(p, grid.nodes))
    ls = np.arange(psi.shape[0])
    phase = np.exp(-1j * np.multiply.outer(ls, grid.nodes))
    return grid.h / (2 * np.pi) * np.sum(psi * inv_sqrt_w * phase, axis=1)


def build_basis(p: Potential, n: int, grid: PeriodicGrid | None = None,
                mode: str = "double", backend: str | None = None) -> OrthonormalBasis:
    """Orthonormalize ``exp(i k lambda) exp(-nV/2)``, ``k = 0..n``, on ``grid``."""
    from .quadrature import default_grid_size

    if n < 1:
        raise ValueError("n must be >= 1")
    if grid is None:
        grid = PeriodicGrid(default_grid_size(n))
    if grid.M < 16 * (n + 1):
        raise ValueError(f"grid too coarse: need M >= {16 * (n + 1)}, got {grid.M}")
    mode = resolve_mode(p, n, mode)
    check_budget(p, n, mode)
    kern = _backend.get_kernels(backend)

    if mode == "double":
        sw = np.exp(-0.5 * n * eval_potential(p, grid.nodes))
        fam = np.exp(1j * np.multiply.outer(np.arange(n + 1), grid.nodes)) * sw
        psi, rdiag = kern.mgs_reorth(fam, grid.h)
    else:
        rh, rl, ih, il = _family_dd(p, n, grid.M)
        _, (hh, hl) = _dd_grid_tables(grid.M)
        psi, rdiag = kern.mgs_reorth_dd(rh, rl, ih, il, hh, hl)

    g = leading_coefficients(psi, p, n, grid)
    # phase convention: leading coefficient real and positive
    psi = psi * (np.abs(g) / g)[:, None]
    gamma = np.abs(g)
    resid = gram_residual(psi, grid.h)
    log.debug("basis n=%d M=%d mode=%s residual=%.2e", n, grid.M, mode, resid)
    if not resid <= ORTHO_TOL:
        raise OrthogonalityLoss(f"orthonormality residual {resid:.3e} > {ORTHO_TOL}")
    psi.flags.writeable = False
    return OrthonormalBasis(p, n, grid, mode, psi, gamma, resid, rdiag)


@dataclass(frozen=True)
class RecursionMatrix:
    """``r[k, j] = int exp(i lambda) psi_k conj(psi_j)``, k < n, j <= n."""

    r: np.ndarray

    def hessenberg_defect(self):
        k, j = np.indices(self.r.shape)
        mask = j > k + 1
        return float(np.max(np.abs(self.r[mask]))) if mask.any() else 0.0

    def row_norm_defect(self):
        return float(np.max(np.abs(np.sum(np.abs(self.r) ** 2, axis=1) - 1.0)))


def recursion_matrix(b: OrthonormalBasis) -> RecursionMatrix:
    psi = b.psi
    n = b.n
    shifted = psi[:n] * np.exp(1j * b.grid.nodes)
    return RecursionMatrix(b.grid.h * (shifted @ psi.conj().T))


def series_residual(b: OrthonormalBasis, rm: RecursionMatrix):
    """Largest L2 norm of ``e^{i lambda} psi_k - sum_{j<=k+1} r_kj psi_j``."""
    n = b.n
    psi = b.psi
    out = 0.0
    e = np.exp(1j * b.grid.nodes)
    for k in range(n):
        recon = rm.r[k, : k + 2] @ psi[: k + 2]
        diff = e * psi[k] - recon
        out = max(out, float(np.sqrt(b.grid.h * np.sum(np.abs(diff) ** 2))))
    return out


def degree_defect(b: OrthonormalBasis):
    """Max relative size of Fourier modes of ``psi_k exp(nV/2)`` outside ``0..k``."""
    M = b.grid.M
    P = b.psi / b.sqrt_weight
    F = np.fft.fft(P, axis=1) / M
    m = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    out = 0.0
    for k in range(b.n + 1):
        mag = np.abs(F[k])
        outside = (m < 0) | (m > k)
        out = max(out, float(mag[outside].max() / mag.max()))
    return out


def symmetry_defect(b: OrthonormalBasis):
    """``max |psi_k(-lambda) - conj(psi_k(lambda))|`` over nodes."""
    M = b.grid.M
    refl = (-np.arange(M)) % M  # -lambda_j = lambda_{M-j} modulo 2 pi
    return float(np.max(np.abs(b.psi[:, refl] - b.psi.conj())))

"""Uniform periodic grids, trapezoid integration, principal-value cotangent
integrals and the Herglotz transform on the circle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NodeMismatch, TooCloseToAxis

# sixth-order centred first-derivative stencil, offsets -3..3
_D1_STENCIL = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def default_grid_size(n: int) -> int:
    """Default node count for an order-``n`` basis: at least 16 points per
    oscillation of the highest mode."""
    return max(4096, 16 * n)


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    """Nodes ``-pi + 2*pi*j/M`` for ``j = 0..M-1``."""

    M: int

    def __post_init__(self):
        if self.M < 256 or self.M % 2:
            raise ValueError(f"grid size must be even and >= 256, got {self.M}")
        nodes = -np.pi + 2 * np.pi * np.arange(self.M) / self.M
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def h(self) -> float:
        return 2 * np.pi / self.M

    def __eq__(self, other):
        return isinstance(other, PeriodicGrid) and other.M == self.M

    def __hash__(self):
        return hash(("PeriodicGrid", self.M))

    def node_index(self, mu: float, tol: float = 1e-9) -> int:
        """Index of the node equal to ``mu`` (mod 2*pi), else NodeMismatch."""
        pos = (float(mu) + np.pi) / self.h
        j = int(np.rint(pos))
        if abs(pos - j) * self.h > tol:
            raise NodeMismatch(f"{mu!r} is not a node of the {self.M}-point grid")
        return j % self.M

    def nearest_index(self, mu: float) -> int:
        return int(np.rint((float(mu) + np.pi) / self.h)) % self.M

    def function(self, values) -> "GridFunction":
        return GridFunction(self, np.asarray(values))

    def sample(self, func) -> "GridFunction":
        return GridFunction(self, np.asarray(func(self.nodes)))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[-1] != self.grid.M:
            raise ValueError(
                f"sample count {self.values.shape[-1]} does not match grid size {self.grid.M}"
            )


def integrate(f: GridFunction):
    """Trapezoid (= rectangle) rule over one period; returns a complex number
    for complex samples and a float otherwise."""
    return f.grid.h * np.sum(f.values, axis=-1)


def _centred_derivative(values, h):
    out = np.zeros_like(values)
    for off, c in zip(range(-3, 4), _D1_STENCIL):
        if c:
            out = out + c * np.roll(values, -off)
    return out / h


def pv_cot_all(f: GridFunction) -> np.ndarray:
    """``v.p. int cot(s/2) f(mu+s) ds`` at every node ``mu``.

    The subtracted form ``cot(s/2) (f(mu+s) - f(mu))`` is summed with the
    trapezoid rule; its value at ``s = 0`` is the limit ``2 f'(mu)``.
    """
    grid = f.grid
    M, h = grid.M, grid.h
    j = np.arange(1, M)
    c = np.zeros(M)
    c[1:] = h / np.tan(np.pi * j / M)
    vals = np.asarray(f.values)
    # correlation sum_j c_j f_{i+j}; c is real
    spec = np.fft.fft(vals) * np.conj(np.fft.fft(c))
    out = np.fft.ifft(spec)
    if not np.iscomplexobj(vals):
        out = out.real
    return out + 2 * h * _centred_derivative(vals, h)


def pv_cot(f: GridFunction, mu: float):
    """Principal value integral at a single node; see :func:`pv_cot_all`."""
    grid = f.grid
    i = grid.node_index(mu)
    M, h = grid.M, grid.h
    vals = np.asarray(f.values)
    j = np.arange(1, M)
    shifted = vals[(i + j) % M]
    total = h * np.sum((shifted - vals[i]) / np.tan(np.pi * j / M))
    idx = (i + np.arange(-3, 4)) % M
    deriv = np.dot(_D1_STENCIL, vals[idx]) / h
    return total + 2 * h * deriv


def herglotz_kernel(lam, z):
    """``(e^{i lam} + e^{i z}) / (e^{i lam} - e^{i z})`` with broadcasting."""
    u = np.exp(1j * np.asarray(lam))
    w = np.exp(1j * np.asarray(z, dtype=complex))
    return (u + w) / (u - w)


def herglotz(g: GridFunction, z):
    """Herglotz transform of ``g`` at ``z`` (scalar or 1-d array).

    Requires ``|Im z| >= 10 h`` so the kernel's pole is resolved by the grid.
    """
    grid = g.grid
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(zs.imag) < 10 * grid.h):
        raise TooCloseToAxis(
            f"|Im z| must be >= {10 * grid.h:.3e} on a {grid.M}-point grid"
        )
    ker = herglotz_kernel(grid.nodes[None, :], zs[:, None])
    out = grid.h * (ker @ np.asarray(g.values, dtype=complex))
    return out if np.ndim(z) else complex(out[0])


class TrigInterpolant:
    """Band-limited trigonometric interpolation of grid rows.

    Rows are expanded as ``sum_m c_m exp(i m x)`` over the integer modes
    ``mode_range = (lo, hi)`` (inclusive); by default all modes the grid
    resolves. Restricting the range drops the roundoff floor and keeps
    off-grid evaluation cheap.
    """

    def __init__(self, grid: PeriodicGrid, rows, mode_range=None):
        rows = np.atleast_2d(np.asarray(rows, dtype=complex))
        M = grid.M
        nyq = M // 2
        F = np.fft.fft(rows, axis=-1) / M
        m = np.fft.fftfreq(M, d=1.0 / M).astype(int)
        # node offset -pi: f_j = sum_m F_m exp(i m (lambda_j + pi))
        F = F * np.where(m % 2 == 0, 1.0, -1.0)
        lo, hi = mode_range if mode_range is not None else (-nyq + 1, nyq - 1)
        self.aliased = lo <= -nyq or hi >= nyq
        lo, hi = max(lo, -nyq + 1), min(hi, nyq - 1)
        sel = (m >= lo) & (m <= hi)
        self.mode_range = (lo, hi)
        self.freqs = m[sel].astype(float)
        self.coeffs = F[:, sel]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * np.multiply.outer(x, self.freqs))
        return np.tensordot(self.coeffs, phase, axes=([1], [x.ndim]))


def spectral_band(values, rel_cut=1e-15, margin=4):
    """Largest |mode| of a real grid function above ``rel_cut`` of its peak."""
    F = np.abs(np.fft.fft(values))
    m = np.abs(np.fft.fftfreq(len(values), d=1.0 / len(values)))
    keep = F > rel_cut * F.max()
    return int(m[keep].max()) + margin

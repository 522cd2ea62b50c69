"""Christoffel-Darboux kernel ``K_n``, determinantal correlations, rescaled
kernels and the exact kernel identities built on the recursion matrix."""
from __future__ import annotations

import functools
from dataclasses import dataclass
from math import lgamma

import numpy as np

from .errors import DimensionTooLarge, OutOfWindow
from .opuc import OrthonormalBasis, recursion_matrix
from .potential import eval_potential

MAX_CORRELATION_ORDER = 8


class KernelEvaluator:
    """Evaluates ``K_n(l, m) = sum_{k<n} psi_k(l) conj(psi_k(m))``."""

    def __init__(self, basis: OrthonormalBasis):
        self.basis = basis
        self.n = basis.n
        self.grid = basis.grid
        self.potential = basis.potential
        psi = basis.psi[: basis.n]
        self.rho_n = np.sum(np.abs(psi) ** 2, axis=0).real / basis.n
        self.rho_n.flags.writeable = False

    @functools.cached_property
    def recursion(self):
        return recursion_matrix(self.basis)

    def features(self, x):
        """``psi_0 .. psi_{n-1}`` at ``x``; shape ``(n,) + shape(x)``."""
        return self.basis.psi_at(x)[: self.n]

    def density(self, x):
        """``rho_n(x) = K_n(x, x) / n`` at arbitrary angles."""
        f = self.features(x)
        return np.sum(np.abs(f) ** 2, axis=0) / self.n

    def cd_kernel(self, lam, mu):
        """``K_n(lam, mu)`` with numpy broadcasting of ``lam`` and ``mu``."""
        lam, mu = np.broadcast_arrays(np.asarray(lam, float), np.asarray(mu, float))
        out = np.sum(self.features(lam) * np.conj(self.features(mu)), axis=0)
        return out if out.ndim else complex(out)

    def kernel_matrix(self, xs, ys):
        """Matrix ``K_n(xs[i], ys[j])``."""
        fx = self.features(np.asarray(xs, float))
        fy = self.features(np.asarray(ys, float))
        return fx.T @ fy.conj()

    def grid_rows(self, idx):
        """``K_n(lambda_i, lambda_j)`` for node indices ``idx`` against all nodes."""
        psi = self.basis.psi[: self.n]
        return psi[:, idx].T @ psi.conj()


def correlation(ev: KernelEvaluator, points):
    """``p_l = (n-l)!/n! det[K_n(x_j, x_k)]``."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    l = pts.size
    if l < 1:
        raise ValueError("need at least one point")
    if l > ev.n:
        raise DimensionTooLarge(f"l = {l} exceeds n = {ev.n}")
    if l > MAX_CORRELATION_ORDER:
        raise DimensionTooLarge(f"l = {l} exceeds the cap {MAX_CORRELATION_ORDER}")
    K = ev.kernel_matrix(pts, pts)
    det = np.linalg.det(K).real
    return float(np.exp(lgamma(ev.n - l + 1) - lgamma(ev.n + 1)) * det)


def pair_density(ev: KernelEvaluator, lam, mu):
    """Two-point marginal from the expanded 2x2 determinant."""
    klm = ev.cd_kernel(lam, mu)
    kll = ev.cd_kernel(lam, lam).real
    kmm = ev.cd_kernel(mu, mu).real
    n = ev.n
    return (kll * kmm - np.abs(klm) ** 2) / (n * (n - 1))


@dataclass(frozen=True)
class RescaledKernel:
    center: float
    scale: float
    convention: str
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    dephased: np.ndarray | None = None


def rescaled_kernel(ev: KernelEvaluator, lam0, xs, ys, convention="diagonal", window=None):
    """Kernel values at ``lam0 + x/s, lam0 + y/s`` divided by ``s``.

    ``convention="diagonal"`` uses ``s = K_n(lam0, lam0)``; ``"order"`` uses
    ``s = n`` and also returns the real dephased kernel
    ``exp(-i (n-1)(x-y)/(2n)) * value``.
    """
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = np.atleast_1d(np.asarray(ys, float))
    if convention == "diagonal":
        s = float(ev.cd_kernel(lam0, lam0).real)
    elif convention == "order":
        s = float(ev.n)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    lx = lam0 + xs / s
    ly = lam0 + ys / s
    if window is not None:
        lo, hi = window
        allpts = np.concatenate([lx, ly])
        if np.any(allpts <= lo) or np.any(allpts >= hi):
            raise OutOfWindow(f"rescaled points leave the window [{lo}, {hi}]")
    vals = ev.kernel_matrix(lx, ly) / s
    deph = None
    if convention == "order":
        n = ev.n
        deph = np.exp(-1j * (n - 1) * np.subtract.outer(xs, ys) / (2 * n)) * vals
    return RescaledKernel(float(lam0), s, convention, xs, ys, vals, deph)


def dephased_kernel(ev: KernelEvaluator, lam0, xs, ys):
    """Real part of the dephased ``s = n`` kernel plus its largest imaginary part."""
    rk = rescaled_kernel(ev, lam0, xs, ys, convention="order")
    return rk.dephased.real, float(np.max(np.abs(rk.dephased.imag)))


def dirichlet_kernel(n, lam, mu):
    """Closed form of ``K_n`` for the flat weight."""
    d = np.asarray(lam, float) - np.asarray(mu, float)
    num = np.sin(n * d / 2)
    den = 2 * np.pi * np.sin(d / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(den) < 1e-300, n / (2 * np.pi), num / np.where(den == 0, 1, den))
    return np.exp(1j * (n - 1) * d / 2) * ratio


def _block_iter(M, block=512):
    for start in range(0, M, block):
        yield np.arange(start, min(start + block, M))


def kernel_identity_residuals(ev: KernelEvaluator, lam, deltas=(0.5, 1.0)):
    """Residuals and slacks of the exact kernel identities at node ``lam``.

    Slacks are ``bound - value`` and must be non-negative up to roundoff.
    """
    b = ev.basis
    grid = ev.grid
    h = grid.h
    nodes = grid.nodes
    n = ev.n
    i = grid.node_index(lam)
    rm = ev.recursion
    row = ev.grid_rows([i])[0]  # K_n(lam, mu_j)
    k2 = np.abs(row) ** 2
    el = np.exp(1j * nodes[i])
    em = np.exp(1j * nodes)
    psi_n1 = b.psi[n - 1, i]
    psi_n = b.psi[n, i]
    edge = abs(psi_n1) ** 2 + abs(psi_n) ** 2

    lhs = h * np.sum((el - em) * k2)
    rhs = rm.r[n - 1, n] * psi_n * np.conj(psi_n1)
    one = abs(lhs)
    two = h * np.sum(np.abs(el - em) ** 2 * k2)
    out = {
        "christoffel_darboux": float(abs(lhs - rhs)),
        "one_variable_slack": float(0.5 * edge - one),
        "two_variable_slack": float(edge - two),
        "r_last": float(abs(rm.r[n - 1, n])),
    }
    for d in deltas:
        far = np.abs(el - em) > d
        val = h * np.sum(k2[far])
        out[f"distance_tail_slack[{d}]"] = float(edge / d**2 - val)
    return out


def double_integrals(ev: KernelEvaluator, deltas=(0.5, 1.0), block=512):
    """``int int |e^{il}-e^{im}|^2 |K|^2`` and the delta-tail integrals."""
    grid = ev.grid
    h = grid.h
    em = np.exp(1j * grid.nodes)
    var = 0.0
    tails = {d: 0.0 for d in deltas}
    for idx in _block_iter(grid.M, block):
        k2 = np.abs(ev.grid_rows(idx)) ** 2
        dist = np.abs(em[idx][:, None] - em[None, :])
        var += h * h * np.sum(dist**2 * k2)
        for d in deltas:
            tails[d] += h * h * np.sum(k2[dist > d])
    return var, tails


def reproducing_residual(ev: KernelEvaluator, lam, mu):
    """``|int K(lam, nu) K(nu, mu) d nu - K(lam, mu)|`` for arbitrary angles."""
    h = ev.grid.h
    psi = ev.basis.psi[: ev.n]
    fl = ev.features(np.asarray(lam, float))
    fm = ev.features(np.asarray(mu, float))
    left = fl.T @ psi.conj()  # K(lam, nu_j)
    right = psi.T @ fm.conj()  # K(nu_j, mu)
    integral = h * np.einsum("aj,jb->ab", left, right)
    direct = fl.T @ fm.conj()
    return np.abs(integral - direct)


def density_derivative_identity(ev: KernelEvaluator, idx):
    """Centred-difference ``rho_n'`` and ``int (V'(mu) - V'(lam)) |K|^2 d mu``
    at node indices ``idx``."""
    grid = ev.grid
    h = grid.h
    idx = np.atleast_1d(idx)
    rho = ev.rho_n
    M = grid.M
    fd = (rho[(idx + 1) % M] - rho[(idx - 1) % M]) / (2 * h)
    vp = eval_potential(ev.potential, grid.nodes, 1)
    k2 = np.abs(ev.grid_rows(idx)) ** 2
    integral = h * np.sum((vp[None, :] - vp[idx][:, None]) * k2, axis=1)
    return fd, integral


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    value: float
    bound: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.bound)


def cauchy_bound_excess(ev: KernelEvaluator, idx):
    """``max |K(l_i, l_j)|^2 - K(l_i, l_i) K(l_j, l_j)`` over ``i in idx`` and all nodes."""
    rows = ev.grid_rows(idx)
    diag = ev.n * ev.rho_n
    return float(np.max(np.abs(rows) ** 2 - diag[idx][:, None] * diag[None, :]))


def identity_suite(ev: KernelEvaluator, n_nodes=8, deltas=(0.5, 1.0)):
    """Every exact finite-``n`` identity as a list of ``IdentityCheck``.

    Each check passes when its measured value is at most its bound.
    """
    grid = ev.grid
    n = ev.n
    idx = (np.arange(n_nodes) * grid.M) // n_nodes + grid.M // (2 * n_nodes)
    lam = grid.nodes[idx]
    checks = []
    rep = reproducing_residual(ev, lam, lam[::-1] + 0.3 * grid.h)
    checks.append(IdentityCheck("reproducing", float(rep.max()), 1e-7 * n))
    checks.append(IdentityCheck("cauchy_bound", cauchy_bound_excess(ev, idx), 1e-10))
    per = [kernel_identity_residuals(ev, x, deltas) for x in lam]
    checks.append(IdentityCheck("christoffel_darboux", max(r["christoffel_darboux"] for r in per), 1e-9))
    checks.append(IdentityCheck("one_variable_bound",
                                -min(r["one_variable_slack"] for r in per), 1e-10))
    checks.append(IdentityCheck("two_variable_bound",
                                -min(r["two_variable_slack"] for r in per), 1e-10))
    for d in deltas:
        checks.append(IdentityCheck(f"distance_tail_bound[{d}]",
                                    -min(r[f"distance_tail_slack[{d}]"] for r in per), 1e-10))
    var, tails = double_integrals(ev, deltas)
    checks.append(IdentityCheck("variation", var, 2 + 1e-9))
    for d in deltas:
        checks.append(IdentityCheck(f"double_tail[{d}]", tails[d], 2 / d**2 + 1e-9))
    rm = ev.recursion
    checks.append(IdentityCheck("recursion_hessenberg", rm.hessenberg_defect(), 1e-10))
    checks.append(IdentityCheck("recursion_row_norm", rm.row_norm_defect(), 1e-10))
    fd, integral = density_derivative_identity(ev, idx)
    checks.append(IdentityCheck("density_derivative", float(np.max(np.abs(fd - integral))),
                                max(1e-6 * n * n, 1e-4)))
    return checks

"""Equilibrium density by fixed-point iteration on the square-root
representation, Herglotz transforms of the finite-n density and the
principal-value drift diagnostic."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence
from .kernel import KernelEvaluator
from .potential import Potential, eval_potential
from .quadrature import (
    GridFunction,
    PeriodicGrid,
    TrigInterpolant,
    herglotz,
    herglotz_kernel,
    pv_cot,
    pv_cot_all,
)

log = logging.getLogger(__name__)

BULK_THRESHOLD = 0.01
MAX_CLAMP_RATIO = 0.10


def q_transform_all(p: Potential, rho: GridFunction) -> np.ndarray:
    """``Q(mu)`` at every node, ``-i v.p. int cot(s/2) (V'(mu+s) - V'(mu)) rho(mu+s) ds``.

    Uses linearity: the subtracted integral splits into ``pv[V' rho] - V'(mu) pv[rho]``.
    """
    grid = rho.grid
    vp = eval_potential(p, grid.nodes, 1)
    r = np.asarray(rho.values, dtype=float)
    pv = pv_cot_all(grid.function(vp * r)) - vp * pv_cot_all(rho)
    return -1j * pv


def q_transform(p: Potential, rho: GridFunction, mu: float) -> complex:
    grid = rho.grid
    vp = eval_potential(p, grid.nodes, 1)
    vmu = float(eval_potential(p, mu, 1))
    f = grid.function((vp - vmu) * np.asarray(rho.values, dtype=float))
    return -1j * pv_cot(f, mu)


@dataclass(frozen=True, eq=False)
class EquilibriumDensity:
    grid: PeriodicGrid
    rho: np.ndarray
    bulk: np.ndarray
    iterations: int
    final_update: float
    clamp_ratio: float
    potential: Potential
    threshold: float = BULK_THRESHOLD

    def two_iq(self):
        """``2 i Q(mu)`` on the grid (real)."""
        return (2j * q_transform_all(self.potential, self.grid.function(self.rho))).real

    def at(self, x):
        """Trigonometric interpolation of ``rho``."""
        return TrigInterpolant(self.grid, self.rho)(x)[0].real

    def record(self):
        return {
            "iterations": self.iterations,
            "final_update": self.final_update,
            "clamp_ratio": self.clamp_ratio,
            "threshold": self.threshold,
            "grid_m": self.grid.M,
            "potential": self.potential.descriptor(),
        }


def _sqrt_update(p, grid, rho, vp):
    arg = (2j * q_transform_all(p, grid.function(rho))).real + 1.0 - vp**2
    clamped = arg < 0
    new = np.sqrt(np.maximum(arg, 0.0)) / (2 * np.pi)
    return new, float(np.mean(clamped))


def solve_density(p: Potential, grid: PeriodicGrid, tol: float = 1e-12,
                  max_iter: int = 500, damping: float = 0.5,
                  threshold: float = BULK_THRESHOLD) -> EquilibriumDensity:
    """Damped fixed point ``rho <- (1-w) rho + w * normalize(sqrt(2iQ + 1 - V'^2)/2pi)``.

    ``w`` starts at ``damping`` and is halved (down to 1/128) whenever the
    sup-norm update grows, which happens near a closing gap where the square
    root is steep.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    vp = eval_potential(p, grid.nodes, 1)
    rho = np.full(grid.M, 1.0 / (2 * np.pi))
    update = np.inf
    clamp = 0.0
    omega = damping
    for it in range(1, max_iter + 1):
        new, clamp = _sqrt_update(p, grid, rho, vp)
        mass = grid.h * new.sum()
        if not mass > 0:
            raise NoConvergence(it, float("inf"), "density collapsed to zero")
        new /= mass
        nxt = (1 - omega) * rho + omega * new
        prev, update = update, float(np.max(np.abs(nxt - rho)))
        rho = nxt
        if update > prev:
            omega = max(omega / 2, 1.0 / 128)
        if update <= tol:
            break
    else:
        raise NoConvergence(max_iter, update)
    if clamp > MAX_CLAMP_RATIO:
        raise NoConvergence(it, update, f"clamp ratio {clamp:.2f}: support has gaps")
    log.debug("equilibrium converged in %d iterations (update %.2e)", it, update)
    rho.flags.writeable = False
    return EquilibriumDensity(grid, rho, rho > threshold, it, update, clamp, p, threshold)


@dataclass(frozen=True)
class ResolventSample:
    z: complex
    f: complex
    q: complex
    square_residual: complex


def finite_n_resolvent(ev: KernelEvaluator, p: Potential, z, eq: EquilibriumDensity | None = None):
    """Herglotz transform ``f_n(z)`` of ``rho_n``, ``Q_n(z)`` and the residual
    ``f_n^2 - 2i V'(mu) f_n - 2i Q(mu) - 1`` with the equilibrium ``Q``."""
    grid = ev.grid
    z = complex(z)
    mu = z.real
    rho_n = grid.function(ev.rho_n)
    f = herglotz(rho_n, z)
    vp = eval_potential(p, grid.nodes, 1)
    vmu = float(eval_potential(p, mu, 1))
    qn = herglotz(grid.function((vp - vmu) * ev.rho_n), z)
    if eq is None:
        eq = solve_density(p, grid)
    q_eq = TrigInterpolant(eq.grid, q_transform_all(p, eq.grid.function(eq.rho)))(mu)[0]
    resid = f * f - 2j * vmu * f - 2j * q_eq - 1.0
    return ResolventSample(z, f, qn, resid)


def vp_diagnostic(ev: KernelEvaluator, p: Potential, lam) -> float:
    """``V'(lam) + v.p. int cot(s/2) rho_n(lam + s) ds`` at a node."""
    return float(eval_potential(p, lam, 1) + pv_cot(ev.grid.function(ev.rho_n), lam))


def herglotz_real_part_density(rho: GridFunction, mu, eta):
    """``Re f(mu + i eta) / 2 pi``; tends to ``rho(mu)`` as ``eta -> 0+``."""
    return herglotz(rho, mu + 1j * eta).real / (2 * np.pi)


__all__ = [
    "EquilibriumDensity",
    "ResolventSample",
    "finite_n_resolvent",
    "herglotz_kernel",
    "herglotz_real_part_density",
    "q_transform",
    "q_transform_all",
    "solve_density",
    "vp_diagnostic",
]

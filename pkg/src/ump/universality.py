"""Convergence experiments: density sweeps, sine-kernel error, the
integro-differential residual of the rescaled kernel and its Fourier profile."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .equilibrium import EquilibriumDensity, solve_density
from .errors import DegenerateFit, OutOfWindow
from .io import csv_text
from .kernel import KernelEvaluator, correlation, rescaled_kernel
from .opuc import build_basis
from .potential import Potential
from .quadrature import PeriodicGrid, default_grid_size

#: Errors below this are treated as the quadrature noise floor.
NOISE_FLOOR = 1e-9


def sine_kernel(x):
    """``sin(pi x) / (pi x)`` with the removable singularity filled."""
    return np.sinc(np.asarray(x, float))


def fit_rate(errors, ns):
    """Least-squares slope of ``log error`` against ``log n``."""
    errors = np.asarray(errors, float)
    ns = np.asarray(ns, float)
    if errors.size < 2 or errors.size != ns.size:
        raise DegenerateFit("need at least two (n, error) pairs")
    if np.any(~np.isfinite(errors)) or np.any(errors < NOISE_FLOOR):
        raise DegenerateFit("errors at or below the noise floor cannot be fitted")
    slope, _ = np.polyfit(np.log(ns), np.log(errors), 1)
    return float(slope)


@dataclass
class ExperimentRecord:
    potential: dict
    n_values: list
    lambda0: float | None
    metric: str
    errors: list
    fitted_rate: float | None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.errors) != len(self.n_values):
            raise ValueError("one error per n value")
        if any(not math.isfinite(e) or e < 0 for e in self.errors):
            raise ValueError("errors must be finite and non-negative")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError("n values must be strictly increasing")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentRecord":
        return cls(**json.loads(text))

    def csv(self) -> str:
        rows = []
        for n, e in zip(self.n_values, self.errors):
            le = math.log(e) if e > 0 else float("-inf")
            rows.append([n, e, math.log(n), le])
        return csv_text(["n", "error", "log_n", "log_error"], rows)


def _rate_or_none(errors, ns):
    keep = [(n, e) for n, e in zip(ns, errors) if e > NOISE_FLOOR]
    if len(keep) < 2:
        return None, [n for n, _ in keep]
    kn, ke = zip(*keep)
    return fit_rate(ke, kn), list(kn)


def _default_basis(p, n, grid, mode):
    return build_basis(p, n, grid, mode=mode)


def density_convergence(p: Potential, n_values, window=(-np.pi / 2, np.pi / 2),
                        mode="auto", grid_m=None, eq=None, basis_fn=None):
    """Sup over window nodes of ``|rho_n - rho|`` for each ``n``.

    ``basis_fn(p, n, grid, mode)`` may supply bases, e.g. from a cache.
    """
    basis_fn = basis_fn or _default_basis
    n_values = sorted(int(n) for n in n_values)
    grid = PeriodicGrid(grid_m or default_grid_size(max(n_values)))
    if eq is None:
        eq = solve_density(p, grid)
    mask = (grid.nodes >= window[0]) & (grid.nodes <= window[1])
    if not np.all(eq.bulk[mask]):
        raise OutOfWindow("density window leaves the bulk")
    errors = []
    modes = []
    for n in n_values:
        ev = KernelEvaluator(basis_fn(p, n, grid, mode))
        modes.append(ev.basis.mode)
        errors.append(float(np.max(np.abs(ev.rho_n - eq.rho)[mask])))
    rate, fitted_on = _rate_or_none(errors, n_values)
    return ExperimentRecord(
        potential=p.descriptor(), n_values=n_values, lambda0=None,
        metric="sup_density_error", errors=errors, fitted_rate=rate,
        metadata={"grid_m": grid.M, "precision": modes, "window": list(window),
                  "fitted_on": fitted_on},
    )


def bulk_window(eq: EquilibriumDensity, lam0):
    """Largest node interval around ``lam0`` inside the bulk mask."""
    grid = eq.grid
    i = grid.nearest_index(lam0)
    if not eq.bulk[i]:
        raise OutOfWindow(f"lambda0 = {lam0} is not in the bulk")
    if np.all(eq.bulk):
        return (-np.inf, np.inf)
    M = grid.M
    lo = i
    while eq.bulk[(lo - 1) % M] and (i - lo) < M:
        lo -= 1
    hi = i
    while eq.bulk[(hi + 1) % M] and (hi - i) < M:
        hi += 1
    return (grid.nodes[0] + lo * grid.h, grid.nodes[0] + hi * grid.h)


def box_points(halfwidth, pts):
    return np.linspace(-halfwidth, halfwidth, int(pts))


def sine_kernel_error(ev: KernelEvaluator, eq: EquilibriumDensity | None, lam0,
                      box_halfwidth=2.0, grid_pts=21):
    """``sup | |K_n(rescaled)| / K_n(l0, l0) - |S(x - y)| |`` over the box."""
    xs = box_points(box_halfwidth, grid_pts)
    window = bulk_window(eq, lam0) if eq is not None else None
    rk = rescaled_kernel(ev, lam0, xs, xs, convention="diagonal", window=window)
    target = np.abs(sine_kernel(np.subtract.outer(xs, xs)))
    return float(np.max(np.abs(np.abs(rk.values) - target)))


def dephased_imag_max(ev: KernelEvaluator, lam0, box_halfwidth=2.0, grid_pts=21):
    """Largest ``|Im|`` of the dephased ``s = n`` kernel over the box."""
    xs = box_points(box_halfwidth, grid_pts)
    rk = rescaled_kernel(ev, lam0, xs, xs, convention="order")
    return float(np.max(np.abs(rk.dephased.imag)))


def determinant_error(ev: KernelEvaluator, lam0, xs):
    """``| n!/(n-l)! p_l(l0 + x/K0) / K0^l - det S(x_j - x_k) |`` with ``K0 = K_n(l0, l0)``."""
    xs = np.asarray(xs, float)
    l = xs.size
    k0 = float(ev.cd_kernel(lam0, lam0).real)
    pl = correlation(ev, lam0 + xs / k0)
    falling = math.exp(math.lgamma(ev.n + 1) - math.lgamma(ev.n - l + 1))
    scaled = falling * pl / k0**l
    target = np.linalg.det(sine_kernel(np.subtract.outer(xs, xs)))
    return float(abs(scaled - target))


def sine_kernel_sweep(p: Potential, n_values, lam0, box_halfwidth=2.0, grid_pts=21,
                      mode="auto", grid_m=None, basis_fn=None,
                      det_points=((0.0, 0.5), (0.0, 0.4, 1.1))):
    """Sine-kernel error for each ``n`` plus determinant-correlation errors and
    the realness defect of the dephased kernel in the metadata."""
    basis_fn = basis_fn or _default_basis
    n_values = sorted(int(n) for n in n_values)
    grid = PeriodicGrid(grid_m or default_grid_size(max(n_values)))
    eq = solve_density(p, grid)
    errors, imag, modes = [], [], []
    dets = {str(list(x)): [] for x in det_points}
    for n in n_values:
        ev = KernelEvaluator(basis_fn(p, n, grid, mode))
        modes.append(ev.basis.mode)
        errors.append(sine_kernel_error(ev, eq, lam0, box_halfwidth, grid_pts))
        imag.append(dephased_imag_max(ev, lam0, box_halfwidth, grid_pts))
        for x in det_points:
            dets[str(list(x))].append(determinant_error(ev, lam0, x))
    rate, fitted_on = _rate_or_none(errors, n_values)
    return ExperimentRecord(
        potential=p.descriptor(), n_values=n_values, lambda0=float(lam0),
        metric="sine_kernel_modulus_error", errors=errors, fitted_rate=rate,
        metadata={"grid_m": grid.M, "precision": modes, "box": box_halfwidth,
                  "grid_pts": grid_pts, "dephased_imag_max": imag,
                  "determinant_errors": dets, "fitted_on": fitted_on},
    )


def _dephased(ev, lam0, xs, ys):
    rk = rescaled_kernel(ev, lam0, xs, ys, convention="order")
    return rk.dephased.real


def kernel_equation_residuals(ev: KernelEvaluator, lam0, xs, y, ell=None,
                              nodes=200, step=1e-4):
    """Per-``x`` residual of ``d/dx K(x,y) = v.p. int_{|z|<=2L} K(x,z) K(z,y)/(z-x) dz``
    for the dephased ``s = n`` kernel."""
    n = ev.n
    ell = math.log(n) if ell is None else float(ell)
    if ell > math.log(n) + 1e-12:
        raise OutOfWindow("L must not exceed ln n")
    return equation_residuals(lambda a, b: _dephased(ev, lam0, a, b), xs, y, ell,
                              nodes, step)


def equation_residuals(kfun, xs, y, ell, nodes=200, step=1e-4):
    """Residuals of the integro-differential equation for any real kernel
    ``kfun(xs, ys) -> matrix``. The principal value is split at ``z = x``;
    each half is a Gauss-Legendre rule applied after subtracting the value
    at the singularity, and the subtracted part is integrated exactly."""
    xs = np.atleast_1d(np.asarray(xs, float))
    if np.any(np.abs(xs) > ell) or abs(y) > ell:
        raise OutOfWindow(f"|x|, |y| must not exceed L = {ell:.4g}")
    lhs = (kfun(xs + step, [y])[:, 0] - kfun(xs - step, [y])[:, 0]) / (2 * step)
    gl_t, gl_w = np.polynomial.legendre.leggauss(nodes)
    a, b = -2 * ell, 2 * ell
    out = np.empty(xs.size)
    for i, x in enumerate(xs):
        z1 = 0.5 * (x - a) * gl_t + 0.5 * (x + a)
        z2 = 0.5 * (b - x) * gl_t + 0.5 * (b + x)
        z = np.concatenate([z1, z2])
        w = np.concatenate([0.5 * (x - a) * gl_w, 0.5 * (b - x) * gl_w])
        g = kfun([x], z)[0] * kfun(z, [y])[:, 0]
        gx = kfun([x], [x])[0, 0] * kfun([x], [y])[0, 0]
        pv = np.sum(w * (g - gx) / (z - x)) + gx * math.log((b - x) / (x - a))
        out[i] = abs(lhs[i] - pv)
    return out


def sine_profile_kernel(rho0):
    """Limit kernel ``rho0 S(rho0 (x - y))`` on the ``s = n`` scale."""
    return lambda xs, ys: rho0 * sine_kernel(rho0 * np.subtract.outer(
        np.asarray(xs, float), np.asarray(ys, float)))


def kernel_equation_residual(ev: KernelEvaluator, lam0, xs, y, ell=None):
    return float(np.max(kernel_equation_residuals(ev, lam0, xs, y, ell)))


def difference_kernel_defect(ev: KernelEvaluator, lam0, xmax=1.0, ymax=3.0, pts=21):
    """``max |K(x, y) - K(0, y - x)|`` over ``|x| <= xmax``, ``|y| <= ymax``."""
    xs = np.linspace(-xmax, xmax, pts)
    ys = np.linspace(-ymax, ymax, pts)
    full = _dephased(ev, lam0, xs, ys)
    shifted = np.array([_dephased(ev, lam0, [0.0], ys - x)[0] for x in xs])
    return float(np.max(np.abs(full - shifted)))


@dataclass
class FourierProfile:
    ell: float
    p: np.ndarray
    khat: np.ndarray
    F: np.ndarray
    p0: float
    rho_n0: float
    imag_max: float

    def clip_error(self, span=2.0):
        sel = np.abs(self.p) <= span * self.p0 + 1e-12
        target = np.clip(self.p, -self.p0, self.p0)
        return float(np.max(np.abs(self.F[sel] - target[sel])))

    def total_mass(self):
        """``int K*hat dp`` over the p-grid; real by conjugate symmetry."""
        return float((self.F[-1] - self.F[0]).real)

    def antisymmetry_defect(self):
        return float(np.max(np.abs(self.F + self.F[::-1])))

    def monotonicity_defect(self):
        """Largest drop of ``Re F_n`` below its running maximum."""
        f = self.F.real
        return float(np.max(np.maximum.accumulate(f) - f))


def profile_function(ev: KernelEvaluator, lam0, ell, x):
    """``K*_n(x)``: dephased ``K_n(x, 0)`` on ``|x| <= L`` with linear caps to zero on
    ``[L, L+1]`` and ``[-L-1, -L]``."""
    x = np.asarray(x, float)
    out = np.zeros_like(x)
    mid = np.abs(x) <= ell
    if mid.any():
        out[mid] = _dephased(ev, lam0, x[mid], [0.0])[:, 0]
    kp = _dephased(ev, lam0, [ell], [0.0])[0, 0]
    km = _dephased(ev, lam0, [-ell], [0.0])[0, 0]
    right = (x > ell) & (x <= ell + 1)
    left = (x < -ell) & (x >= -ell - 1)
    out[right] = kp * (1 + ell - x[right])
    out[left] = km * (1 + ell + x[left])
    return out


def fourier_profile(ev: KernelEvaluator, lam0, ell=None, rho0=None, p_points=1201,
                    quad_nodes=400):
    """Fourier transform of ``K*_n`` on ``[-3 p0, 3 p0]`` and its running
    integral ``F_n(p) = int_0^p``; ``rho0`` defaults to the solved equilibrium
    density at ``lam0``."""
    ell = math.log(ev.n) if ell is None else float(ell)
    if rho0 is None:
        eq = solve_density(ev.potential, ev.grid)
        rho0 = float(eq.at(lam0))
    p0 = math.pi * rho0
    t, w = np.polynomial.legendre.leggauss(quad_nodes)
    xs, ws = [], []
    for a, b in ((-ell - 1, -ell), (-ell, ell), (ell, ell + 1)):
        xs.append(0.5 * (b - a) * t + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    x = np.concatenate(xs)
    wx = np.concatenate(ws)
    kstar = profile_function(ev, lam0, ell, x)
    if p_points % 2 == 0:
        p_points += 1
    p = np.linspace(-3 * p0, 3 * p0, p_points)
    khat = (np.exp(1j * np.multiply.outer(p, x)) * (wx * kstar)).sum(axis=1)
    dp = p[1] - p[0]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dp * (khat[1:] + khat[:-1]))])
    F = cum - cum[p_points // 2]
    return FourierProfile(ell, p, khat, F, p0, float(ev.density(lam0)),
                          float(np.max(np.abs(khat.imag))))

"""Even trigonometric potentials ``V(lambda) = V(cos lambda)`` and their weights.

Every potential is stored as a cosine series ``V(l) = sum_m a_m cos(m l)``,
which makes evenness and 2*pi-periodicity hold by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, PrecisionExceeded

#: Largest admissible weight dynamic range per precision mode.
PRECISION_BUDGETS = {"double": 1e12, "extended": 1e32}

KINDS = ("zero", "cosine", "fourier_cos")


@dataclass(frozen=True)
class Potential:
    """Model potential as a function of the angle.

    ``cosine`` with coupling ``t`` means ``V(l) = -t cos l`` so that the weight
    ``exp(-n V)`` is ``exp(n t cos l)``.
    """

    kind: str = "zero"
    t: float = 0.0
    coeffs: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigInvalid(f"unknown potential kind {self.kind!r}")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not all(np.isfinite(self.coeffs)) or not np.isfinite(self.t):
            raise ConfigInvalid("potential parameters must be finite")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def cosine(cls, t):
        return cls("cosine", t=t)

    @classmethod
    def fourier_cos(cls, coeffs):
        return cls("fourier_cos", coeffs=tuple(coeffs))

    @classmethod
    def from_config(cls, spec):
        kind = spec.get("kind", "zero")
        return cls(kind, t=spec.get("t", 0.0), coeffs=tuple(spec.get("coeffs", ())))

    def descriptor(self):
        """Canonical JSON-ready form; also used for cache keys."""
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "cosine":
            return {"kind": "cosine", "t": self.t}
        return {"kind": "fourier_cos", "coeffs": list(self.coeffs)}

    @property
    def cos_coefficients(self):
        """Array ``a`` with ``V(l) = sum_{m>=1} a[m-1] cos(m l)``."""
        if self.kind == "zero":
            return np.zeros(0)
        if self.kind == "cosine":
            return np.array([-self.t])
        return np.asarray(self.coeffs, dtype=float)

    def __call__(self, lam, order=0):
        return eval_potential(self, lam, order)

    def extrema(self):
        """Return ``(min V, max V)`` over the circle."""
        a = self.cos_coefficients
        if a.size == 0 or not np.any(a):
            return 0.0, 0.0
        if self.kind == "cosine":
            return -abs(self.t), abs(self.t)
        # dense scan, then Newton polish on V' at every local extremum
        m = max(4096, 64 * a.size)
        lam = -np.pi + 2 * np.pi * np.arange(m) / m
        v = eval_potential(self, lam)
        vals = [v.min(), v.max()]
        left, right = np.roll(v, 1), np.roll(v, -1)
        cand = lam[((v <= left) & (v <= right)) | ((v >= left) & (v >= right))]
        for x in cand:
            for _ in range(30):
                d2 = eval_potential(self, x, 2)
                if d2 == 0:
                    break
                step = eval_potential(self, x, 1) / d2
                x -= step
                if abs(step) < 1e-15:
                    break
            vals.append(float(eval_potential(self, x)))
        return min(vals), max(vals)

    def log_dynamic_range(self, n):
        lo, hi = self.extrema()
        return n * (hi - lo)

    def dynamic_range(self, n):
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_dynamic_range(n)))


def eval_potential(p: Potential, lam, order: int = 0):
    """``d^order V / d lambda^order`` at ``lam`` (scalar or array), order 0..3."""
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0, 1, 2 or 3")
    lam = np.asarray(lam, dtype=float)
    a = p.cos_coefficients
    out = np.zeros(lam.shape)
    for m, am in enumerate(a, start=1):
        if am == 0.0:
            continue
        ml = m * lam
        if order == 0:
            out = out + am * np.cos(ml)
        elif order == 1:
            out = out - am * m * np.sin(ml)
        elif order == 2:
            out = out - am * m**2 * np.cos(ml)
        else:
            out = out + am * m**3 * np.sin(ml)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class WeightProfile:
    n: int
    samples: np.ndarray
    dynamic_range: float


def check_budget(p: Potential, n: int, mode: str = "double"):
    """Raise :class:`PrecisionExceeded` when ``exp(-nV)`` is too ill-conditioned."""
    if mode not in PRECISION_BUDGETS:
        raise ConfigInvalid(f"unknown precision mode {mode!r}")
    dr = p.dynamic_range(n)
    if dr > PRECISION_BUDGETS[mode]:
        raise PrecisionExceeded(dr, PRECISION_BUDGETS[mode], mode)
    return dr


def weight_profile(p: Potential, n: int, grid, mode: str = "double") -> WeightProfile:
    if n < 1:
        raise ValueError("n must be >= 1")
    dr = check_budget(p, n, mode)
    w = np.exp(-n * eval_potential(p, grid.nodes))
    return WeightProfile(n=n, samples=w, dynamic_range=dr)

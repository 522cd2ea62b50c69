import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ump.errors import NodeMismatch, TooCloseToAxis
from ump.quadrature import (PeriodicGrid, TrigInterpolant, herglotz, integrate, pv_cot,
                            pv_cot_all, spectral_band)


def excision_pv(f, mu, eps=1e-6):
    """Brute-force oracle: integrate around the singularity with an excised gap."""
    g = lambda s: mp.cot(s / 2) * f(mu + s)
    return float(mp.quad(g, [-mp.pi, -eps]) + mp.quad(g, [eps, mp.pi]))


def test_grid_invariants():
    g = PeriodicGrid(256)
    assert g.nodes[0] == -np.pi and np.all(np.diff(g.nodes) > 0) and g.nodes[-1] < np.pi
    assert g.h == pytest.approx(2 * np.pi / 256)
    with pytest.raises(ValueError):
        PeriodicGrid(254)
    with pytest.raises(ValueError):
        PeriodicGrid(257)
    with pytest.raises(ValueError):
        g.function(np.ones(100))


def test_integrate_examples():
    g = PeriodicGrid(512)
    assert integrate(g.sample(lambda x: np.full_like(x, 1 / (2 * np.pi)))) == pytest.approx(1, abs=1e-15)
    assert integrate(g.sample(lambda x: np.cos(x) ** 2)) == pytest.approx(np.pi, abs=1e-12)
    ref = integrate(PeriodicGrid(16384).sample(lambda x: np.exp(np.cos(x))))
    val = integrate(g.sample(lambda x: np.exp(np.cos(x))))
    assert abs(val - ref) <= 1e-12
    assert abs(val - 2 * np.pi * float(mp.besseli(0, 1))) <= 1e-12


def test_spectral_accuracy_doubling():
    # The error at M = 256 already sits at the roundoff floor for this
    # integrand, so the tenfold decrease is checked only above that floor.
    f = lambda x: np.exp(2 * np.cos(x))
    ref = integrate(PeriodicGrid(16384).sample(f))
    e256 = abs(integrate(PeriodicGrid(256).sample(f)) - ref)
    e512 = abs(integrate(PeriodicGrid(512).sample(f)) - ref)
    assert e512 <= max(e256 / 10, 1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 6))
def test_integrate_linear(a, b, k):
    g = PeriodicGrid(256)
    f = g.sample(lambda x: np.cos(k * x) + 0.3)
    h = g.sample(lambda x: np.sin(x) ** 2)
    lhs = integrate(g.function(a * f.values + b * h.values))
    rhs = a * integrate(f) + b * integrate(h)
    scale = np.abs(f.values).max() + np.abs(h.values).max()
    assert abs(lhs - rhs) <= 1e-14 * scale * (1 + abs(a) + abs(b)) * 2 * np.pi


def test_pv_cot_constant_is_zero():
    g = PeriodicGrid(512)
    vals = pv_cot_all(g.function(np.full(512, 3.7)))
    assert np.max(np.abs(vals)) <= 1e-12


@pytest.mark.parametrize("k", range(1, 6))
def test_pv_cot_hilbert_table(k):
    g = PeriodicGrid(4096)
    mu = g.nodes
    hc = pv_cot_all(g.function(np.cos(k * mu)))
    hs = pv_cot_all(g.function(np.sin(k * mu)))
    assert np.max(np.abs(hc + 2 * np.pi * np.sin(k * mu))) <= 1e-8
    assert np.max(np.abs(hs - 2 * np.pi * np.cos(k * mu))) <= 1e-8


def test_pv_cot_against_excision_oracle():
    g = PeriodicGrid(1024)
    cos_f = g.function(np.cos(g.nodes))
    sin_f = g.function(np.sin(g.nodes))
    assert abs(pv_cot(cos_f, 0.0) - excision_pv(mp.cos, 0.0)) <= 1e-5
    assert abs(pv_cot(sin_f, 0.0) - 2 * np.pi) <= 1e-10
    assert abs(pv_cot(sin_f, 0.0) - excision_pv(mp.sin, 0.0)) <= 1e-5
    mu = g.nodes[g.nearest_index(np.pi / 2)]
    assert abs(pv_cot(sin_f, mu) - excision_pv(mp.sin, mu)) <= 1e-5
    smooth = lambda x: mp.exp(0.4 * mp.cos(x)) * (1 + 0.2 * mp.sin(2 * x))
    vals = g.function(np.exp(0.4 * np.cos(g.nodes)) * (1 + 0.2 * np.sin(2 * g.nodes)))
    mu = g.nodes[300]
    assert abs(pv_cot(vals, mu) - excision_pv(smooth, mu)) <= 1e-5


def test_pv_cot_requires_node():
    g = PeriodicGrid(256)
    with pytest.raises(NodeMismatch):
        pv_cot(g.function(np.ones(256)), 0.001)


def test_herglotz_flat_density():
    g = PeriodicGrid(1024)
    flat = g.function(np.full(1024, 1 / (2 * np.pi)))
    assert abs(herglotz(flat, 0.3 + 0.1j) - 1.0) <= 1e-10
    # below the axis the kernel's mean over the circle is -1
    assert abs(herglotz(flat, 0.3 - 0.1j) + 1.0) <= 1e-10
    hi = PeriodicGrid(16384)
    ref = herglotz(hi.function(np.full(16384, 1 / (2 * np.pi))), 0.3 + 0.1j)
    assert abs(herglotz(flat, 0.3 + 0.1j) - ref) <= 1e-10


def test_herglotz_guard():
    g = PeriodicGrid(256)
    with pytest.raises(TooCloseToAxis):
        herglotz(g.function(np.ones(256)), 0.2 + 5 * g.h * 1j)


def test_herglotz_inversion_improves_as_eta_shrinks():
    g = PeriodicGrid(4096)
    rho = (1 + 0.5 * np.cos(g.nodes)) / (2 * np.pi)
    f = g.function(rho)
    mus = g.nodes[::256]
    errs = []
    for eta in (0.2, 0.1, 0.05):
        approx = np.array([herglotz(f, m + 1j * eta).real / (2 * np.pi) for m in mus])
        errs.append(np.max(np.abs(approx - rho[::256])))
    assert errs[0] > errs[1] > errs[2]


def test_trig_interpolant_band_limited_exact():
    g = PeriodicGrid(512)
    rows = np.stack([np.exp(3j * g.nodes), np.cos(7 * g.nodes) + 0.5 * np.sin(2 * g.nodes)])
    ti = TrigInterpolant(g, rows, mode_range=(-10, 10))
    x = np.random.default_rng(0).uniform(-np.pi, np.pi, 50)
    vals = ti(x)
    assert vals.shape == (2, 50)
    assert np.max(np.abs(vals[0] - np.exp(3j * x))) <= 1e-13
    assert np.max(np.abs(vals[1] - np.cos(7 * x) - 0.5 * np.sin(2 * x))) <= 1e-13
    assert not ti.aliased


def test_spectral_band():
    g = PeriodicGrid(1024)
    assert spectral_band(np.cos(5 * g.nodes), margin=0) == 5
    assert spectral_band(np.exp(np.cos(g.nodes)), margin=4) > 10

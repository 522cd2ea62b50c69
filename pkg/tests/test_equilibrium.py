import numpy as np
import pytest

from conftest import evaluator
from ump import PeriodicGrid, Potential
from ump.equilibrium import (finite_n_resolvent, herglotz_real_part_density, q_transform,
                             q_transform_all, solve_density, vp_diagnostic)
from ump.errors import NoConvergence, NodeMismatch, TooCloseToAxis
from ump.potential import eval_potential
from ump.quadrature import herglotz, integrate

GRID = PeriodicGrid(1024)
COS = Potential.cosine(0.5)


def exact_cosine_density(t, x):
    return (1 + t * np.cos(x)) / (2 * np.pi)


@pytest.fixture(scope="module")
def eq_cos():
    return solve_density(COS, GRID)


def test_q_transform_examples():
    rho = GRID.function(exact_cosine_density(0.5, GRID.nodes))
    assert np.max(np.abs(q_transform_all(Potential.zero(), rho))) <= 1e-14
    assert (2j * q_transform(COS, rho, 0.0)).real == pytest.approx(1.25, abs=1e-8)
    assert (2j * q_transform(COS, rho, np.pi)).real == pytest.approx(-0.75, abs=1e-8)
    # closed form 2iQ = 2t cos mu + t^2 at every node
    two_iq = (2j * q_transform_all(COS, rho)).real
    assert np.max(np.abs(two_iq - (np.cos(GRID.nodes) + 0.25))) <= 1e-9
    with pytest.raises(NodeMismatch):
        q_transform(COS, rho, 0.1234)


def test_q_purity(eq_cos):
    q = q_transform_all(COS, GRID.function(eq_cos.rho))
    assert np.all(np.abs(q.real)[eq_cos.bulk] <= 1e-9 * (1 + np.abs(q.imag[eq_cos.bulk])))


def test_flat_equilibrium():
    eq = solve_density(Potential.zero(), GRID)
    assert eq.iterations == 1
    assert np.max(np.abs(eq.rho - 1 / (2 * np.pi))) <= 1e-14
    assert eq.rho[0] == pytest.approx(0.1591549, abs=1e-7)


def test_cosine_equilibrium(eq_cos):
    assert eq_cos.rho[GRID.M // 2] == pytest.approx(0.2387324, abs=1e-6)
    assert np.max(np.abs(eq_cos.rho - exact_cosine_density(0.5, GRID.nodes))) <= 1e-9
    assert integrate(GRID.function(eq_cos.rho)) == pytest.approx(1.0, abs=1e-8)
    refl = (-np.arange(GRID.M)) % GRID.M
    assert np.max(np.abs(eq_cos.rho[refl] - eq_cos.rho)) <= 1e-9
    assert np.all(eq_cos.rho >= 0) and np.all(np.isfinite(eq_cos.rho))
    assert eq_cos.at(0.3) == pytest.approx(exact_cosine_density(0.5, 0.3), abs=1e-9)


def test_near_critical_cosine():
    eq = solve_density(Potential.cosine(0.99), GRID)
    at_pi = eq.rho[0]
    assert at_pi == pytest.approx(0.01 / (2 * np.pi), abs=1e-6)
    assert at_pi > 0 and not eq.bulk[0]
    assert eq.bulk[GRID.M // 2]


def test_self_consistency(eq_cos):
    vp = eval_potential(COS, GRID.nodes, 1)
    rebuilt = np.sqrt(np.maximum(eq_cos.two_iq() + 1 - vp**2, 0)) / (2 * np.pi)
    assert np.max(np.abs(rebuilt - eq_cos.rho)) <= 1e-10


def test_gapped_potential_detected():
    with pytest.raises(NoConvergence):
        solve_density(Potential.cosine(3.0), GRID)
    with pytest.raises(NoConvergence):
        solve_density(COS, GRID, max_iter=3)
    with pytest.raises(ValueError):
        solve_density(COS, GRID, tol=0)


def test_record(eq_cos):
    rec = eq_cos.record()
    assert rec["iterations"] == eq_cos.iterations
    assert rec["final_update"] <= 1e-12
    assert rec["clamp_ratio"] == 0.0


def test_herglotz_inversion_monotone():
    fine = PeriodicGrid(4096)
    rho = fine.function(solve_density(COS, fine).rho)
    # mu = pi/2 is excluded: the smoothed cosine vanishes there for every eta
    for mu in (0.0, 1.0, 2.0, 3.0):
        errs = [abs(herglotz_real_part_density(rho, mu, eta) - exact_cosine_density(0.5, mu))
                for eta in (0.2, 0.1, 0.05)]
        assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("kind,n", [("zero", 16), ("cosine", 16), ("cosine", 48)])
def test_herglotz_positivity(kind, n):
    e = evaluator(kind, n)
    rho_n = e.grid.function(e.rho_n)
    for mu in np.linspace(-np.pi, np.pi, 10, endpoint=False):
        for eta in np.linspace(0.05, 0.5, 10):
            assert herglotz(rho_n, mu + 1j * eta).real > 0


def test_resolvent_flat():
    e = evaluator("zero", 16)
    for z in (0.3 + 0.2j, -2 + 0.05j, 1 + 1j):
        s = finite_n_resolvent(e, Potential.zero(), z)
        assert abs(s.f - 1) <= 1e-9
        assert abs(s.square_residual) <= 1e-9
    with pytest.raises(TooCloseToAxis):
        finite_n_resolvent(e, Potential.zero(), 0.3 + 1e-6j)


def test_resolvent_square_residual_trend(eq_cos):
    res = []
    for n in (16, 32):
        z = 1j * n ** (-4 / 9)
        res.append(abs(finite_n_resolvent(evaluator("cosine", n), COS, z, eq_cos).square_residual))
    assert res[1] <= 0.5
    assert res[1] < res[0]


def test_imaginary_part_tracks_potential(eq_cos):
    s = finite_n_resolvent(evaluator("cosine", 48), COS, np.pi / 2 + 0.05j, eq_cos)
    assert abs(s.f.imag - float(eval_potential(COS, np.pi / 2, 1))) <= 0.1


def test_vp_diagnostic():
    z = evaluator("zero", 16)
    for lam in z.grid.nodes[::300]:
        assert abs(vp_diagnostic(z, Potential.zero(), lam)) <= 1e-9
    d12 = abs(vp_diagnostic(evaluator("cosine", 12), COS, np.pi / 2))
    d48 = abs(vp_diagnostic(evaluator("cosine", 48), COS, np.pi / 2))
    assert d48 < d12
    e = evaluator("cosine", 32)
    assert abs(vp_diagnostic(e, COS, 0.0)) <= 0.5
    with pytest.raises(NodeMismatch):
        vp_diagnostic(e, COS, 0.1234567)


def test_vp_diagnostic_excision_oracle():
    """Cross-check the spectral p.v. against a brute-force symmetric excision."""
    e = evaluator("cosine", 32)
    lam = e.grid.nodes[e.grid.M // 3]
    eps = 1e-3
    s = np.linspace(eps, np.pi, 400001)
    f = lambda x: np.interp(np.mod(x + np.pi, 2 * np.pi), e.grid.nodes + np.pi, e.rho_n, period=2 * np.pi)
    integrand = (f(lam + s) - f(lam - s)) / np.tan(s / 2)
    pv = np.trapezoid(integrand, s) if hasattr(np, "trapezoid") else np.trapz(integrand, s)
    ref = float(eval_potential(COS, lam, 1)) + pv
    assert abs(vp_diagnostic(e, COS, lam) - ref) <= 1e-3

import math

import numpy as np
import pytest

from conftest import evaluator
from ump.errors import DimensionTooLarge, OutOfWindow
from ump.kernel import (cauchy_bound_excess, correlation, dephased_kernel, dirichlet_kernel,
                        double_integrals, density_derivative_identity, identity_suite,
                        kernel_identity_residuals, pair_density, rescaled_kernel,
                        reproducing_residual)
from ump.universality import sine_kernel

RNG = np.random.default_rng(2024)


def geometric_sum(n, lam, mu):
    """Independent oracle: the defining sum for the flat weight, term by term."""
    k = np.arange(n)
    return np.sum(np.exp(1j * k * (lam - mu))) / (2 * np.pi)


def test_flat_kernel_closed_form():
    e = evaluator("zero", 10)
    lam = RNG.uniform(-np.pi, np.pi, 30)
    mu = RNG.uniform(-np.pi, np.pi, 30)
    got = e.cd_kernel(lam, mu)
    ref = np.array([geometric_sum(10, a, b) for a, b in zip(lam, mu)])
    assert np.max(np.abs(got - ref)) <= 1e-10
    assert np.max(np.abs(dirichlet_kernel(10, lam, mu) - ref)) <= 1e-12
    assert e.cd_kernel(0.7, 0.7).real == pytest.approx(10 / (2 * np.pi), abs=1e-12)


@pytest.mark.parametrize("kind,n", [("zero", 16), ("cosine", 16), ("cosine", 32)])
def test_cauchy_bound_and_hermitian(kind, n):
    e = evaluator(kind, n)
    lam = RNG.uniform(-np.pi, np.pi, 100)
    mu = RNG.uniform(-np.pi, np.pi, 100)
    k = e.cd_kernel(lam, mu)
    assert np.all(np.abs(k) ** 2 <= e.cd_kernel(lam, lam).real * e.cd_kernel(mu, mu).real + 1e-10)
    assert np.max(np.abs(k - np.conj(e.cd_kernel(mu, lam)))) <= 1e-12
    assert cauchy_bound_excess(e, np.arange(0, e.grid.M, 97)) <= 1e-10


@pytest.mark.parametrize("kind,n", [("zero", 12), ("cosine", 12), ("cosine", 40)])
def test_density_mass_positivity_evenness(kind, n):
    e = evaluator(kind, n)
    g = e.grid
    assert np.all(e.rho_n >= 0)
    assert abs(g.h * e.rho_n.sum() - 1) <= 1e-8
    refl = (-np.arange(g.M)) % g.M
    assert np.max(np.abs(e.rho_n[refl] - e.rho_n)) <= 1e-9
    x = RNG.uniform(-np.pi, np.pi, 20)
    assert np.max(np.abs(e.density(x) - e.density(-x))) <= 1e-9


def test_correlation_examples():
    e = evaluator("cosine", 16)
    for lam in (0.3, -1.2):
        assert correlation(e, [lam]) == pytest.approx(float(e.density(lam)), rel=1e-12)
    assert abs(correlation(e, [0.4, 0.4])) <= 1e-14
    z = evaluator("zero", 16)
    n = 16
    p2 = correlation(z, [0.1, 0.1 + 2 * np.pi / n])
    assert p2 == pytest.approx((n / (2 * np.pi)) ** 2 / (n * (n - 1)), rel=1e-10)
    with pytest.raises(DimensionTooLarge):
        correlation(evaluator("zero", 4), np.linspace(0, 1, 5))


@pytest.mark.parametrize("kind", ["zero", "cosine"])
def test_pair_density_expansion(kind):
    e = evaluator(kind, 20)
    for lam, mu in RNG.uniform(-np.pi, np.pi, (10, 2)):
        n = e.n
        klm = e.cd_kernel(lam, mu)
        marg2 = (e.cd_kernel(lam, lam).real * e.cd_kernel(mu, mu).real - abs(klm) ** 2) / (n * (n - 1))
        assert abs(correlation(e, [lam, mu]) - marg2) <= 1e-10
        assert abs(pair_density(e, lam, mu) - marg2) <= 1e-10


def test_determinants_nonnegative():
    e = evaluator("cosine", 20)
    for l in (2, 3, 4):
        for _ in range(20):
            assert correlation(e, RNG.uniform(-np.pi, np.pi, l)) >= -1e-10


def test_rescaled_kernel_flat_examples():
    e = evaluator("zero", 50)
    rk = rescaled_kernel(e, 0.4, [0.0, 0.5], [0.0], convention="diagonal")
    assert rk.values[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert abs(abs(rk.values[1, 0]) - 2 / np.pi) <= 0.01
    # exact oracle: Dirichlet ratio at spacing 0.5 / K_n
    s = 50 / (2 * np.pi)
    d = 0.5 / s
    assert abs(rk.values[1, 0]) == pytest.approx(abs(np.sin(50 * d / 2) / (50 * np.sin(d / 2))), abs=1e-12)
    xs = np.linspace(-2, 2, 7)
    rk = rescaled_kernel(e, 0.4, xs, xs)
    prod = rk.values * rk.values.T
    assert np.max(np.abs(np.angle(prod[np.abs(prod) > 1e-8]))) <= 1e-10


def test_rescaled_window_guard():
    e = evaluator("cosine", 16)
    with pytest.raises(OutOfWindow):
        rescaled_kernel(e, 1.5, [0.0, 3.0], [0.0], window=(-2.0, 1.6))
    with pytest.raises(ValueError):
        rescaled_kernel(e, 0.0, [0.0], [0.0], convention="other")


@pytest.mark.parametrize("kind,n", [("zero", 24), ("cosine", 24), ("cosine", 48)])
def test_dephased_kernel_real_symmetric(kind, n):
    e = evaluator(kind, n)
    xs = np.linspace(-2, 2, 11)
    for lam0 in (0.0, np.pi / 2, -1.0):
        re, imag = dephased_kernel(e, lam0, xs, xs)
        assert imag <= 1e-8
        assert np.max(np.abs(re - re.T)) <= 1e-8


@pytest.mark.parametrize("kind,n", [("zero", 16), ("cosine", 24)])
def test_rescaled_reproducing_property(kind, n):
    e = evaluator(kind, n)
    g = e.grid
    lam0 = 0.3
    z = n * (g.nodes - lam0)
    xs = np.array([-1.0, 0.0, 0.7])
    kd = rescaled_kernel(e, lam0, xs, z, convention="order").dephased
    kz = rescaled_kernel(e, lam0, z, xs, convention="order").dephased
    integral = n * g.h * kd @ kz
    direct = rescaled_kernel(e, lam0, xs, xs, convention="order").dephased
    assert np.max(np.abs(integral - direct)) <= 1e-7


@pytest.mark.parametrize("kind,n", [("zero", 8), ("zero", 32), ("cosine", 16), ("cosine", 32)])
def test_reproducing_property(kind, n):
    e = evaluator(kind, n)
    lam = RNG.uniform(-np.pi, np.pi, 20)
    mu = RNG.uniform(-np.pi, np.pi, 20)
    assert np.max(reproducing_residual(e, lam, mu)) <= 1e-7 * n


def test_identity_residuals_flat():
    e = evaluator("zero", 16)
    for lam in e.grid.nodes[::512]:
        r = kernel_identity_residuals(e, lam)
        assert r["christoffel_darboux"] <= 1e-12
        assert r["one_variable_slack"] >= -1e-9
        assert r["two_variable_slack"] >= -1e-9
        assert r["r_last"] == pytest.approx(1.0, abs=1e-13)
    var, tails = double_integrals(e)
    assert var <= 2 + 1e-9
    assert tails[1.0] <= 2 + 1e-9
    assert tails[0.5] <= 8 + 1e-9


def test_density_derivative_identity_cosine():
    for n in (12, 24):
        e = evaluator("cosine", n)
        idx = np.arange(0, e.grid.M, 256)
        fd, integral = density_derivative_identity(e, idx)
        assert np.max(np.abs(fd - integral)) <= max(1e-6 * n * n, 1e-4)


@pytest.mark.parametrize("kind,n", [("zero", 24), ("cosine", 24), ("cosine", 32)])
def test_identity_suite_green(kind, n):
    checks = identity_suite(evaluator(kind, n))
    failed = [c for c in checks if not c.passed]
    assert not failed, failed


def test_sine_kernel_limit_values():
    assert sine_kernel(0.0) == 1.0
    assert sine_kernel(0.5) == pytest.approx(2 / np.pi)
    assert abs(sine_kernel(1.0)) <= 1e-16

"""Conjugates, velocities, and search radii against independent oracles."""

import numpy as np
import pytest

import semilag as sl
from semilag.hamiltonians import INF, as_points, velocity


def brute_force_conjugate(model, x, t, xi, p_max, n=200001):
    """Independent grid-sup oracle for sup_p {xi.p - H(x,t,p)} in d=1."""
    p = np.linspace(-p_max, p_max, n)
    x = np.atleast_2d(x)
    vals = xi * p - model.hamiltonian(np.repeat(x, p.size, axis=0), t, p.reshape(-1, 1))
    return float(np.max(vals))


def test_as_points_shapes():
    assert as_points(0.5, 1).shape == (1, 1)
    assert as_points([1.0, 2.0], 1).shape == (2, 1)
    assert as_points([1.0, 2.0], 2).shape == (1, 2)
    assert as_points(np.zeros((5, 2)), 2).shape == (5, 2)
    with pytest.raises(ValueError):
        as_points(np.zeros((5, 3)), 2)
    with pytest.raises(ValueError):
        as_points(1.0, 2)


def test_schrodinger_conjugate_matches_oracle():
    model = sl.schrodinger(1, sl.quadratic_potential(1.0))
    rng = np.random.default_rng(7)
    for _ in range(25):
        x = rng.uniform(-2, 2, (1, 1))
        t = rng.uniform(0, 1)
        xi = rng.uniform(-3, 3)
        got = sl.legendre_transform(model, x, t, np.array([xi]))[0]
        want = brute_force_conjugate(model, x, t, xi, p_max=abs(xi) + 2.0)
        assert abs(got - want) < 1e-6


def test_bethe_salpeter_conjugate_and_sentinel():
    model = sl.bethe_salpeter(1)
    rng = np.random.default_rng(8)
    K = 1.0 / np.sqrt(2.0)
    for _ in range(25):
        xi = rng.uniform(-0.95 * K, 0.95 * K)
        x = rng.uniform(-2, 2, (1, 1))
        got = sl.legendre_transform(model, x, 0.0, np.array([xi]))[0]
        want = brute_force_conjugate(model, x, 0.0, xi, p_max=10.0)
        assert abs(got - want) < 1e-6
        # closed form -sqrt(1 - 2 xi^2)
        assert abs(got - (-np.sqrt(1.0 - 2.0 * xi * xi))) < 1e-12
    out = sl.legendre_transform(model, [0.0], 0.0, np.array([K + 1e-6]))
    assert out[0] == INF


def test_eikonal_conjugate_indicator():
    model = sl.eikonal(1)
    inside = sl.legendre_transform(model, [0.3], 0.0, np.array([0.99]))
    assert inside[0] == 0.0
    outside = sl.legendre_transform(model, [0.3], 0.0, np.array([1.01]))
    assert outside[0] == INF


def test_numeric_conjugate_matches_closed_form():
    base = sl.schrodinger(1)
    import dataclasses

    numeric = dataclasses.replace(base, conjugate=None)
    rng = np.random.default_rng(9)
    for _ in range(10):
        xi = rng.uniform(-2, 2)
        got = sl.legendre_transform(numeric, [0.0], 0.0, np.array([xi]))[0]
        assert abs(got - 0.5 * xi * xi) < 1e-6


def test_velocities():
    sh = sl.schrodinger(2)
    p = np.array([0.3, -0.4])
    assert np.allclose(velocity(sh, np.zeros((1, 2)), p), p)
    bs = sl.bethe_salpeter(1)
    big = bs.a(np.zeros((1, 1)), np.array([1e6]))
    assert np.linalg.norm(big) <= np.sqrt(2.0) + 1e-9
    eik = sl.eikonal(1)
    assert eik.a(np.zeros((1, 1)), np.array([0.0]))[0, 0] == 0.0
    assert abs(abs(eik.a(np.zeros((1, 1)), np.array([-3.0]))[0, 0]) - 1.0) < 1e-14


def test_xi_search_radius_superlinear_closed_form():
    # for H = |p|^2/2 the radius solving H*(R) = bound is sqrt(2 bound)
    model = sl.schrodinger(1)
    sup_u, h = 2.0, 0.1
    bound = 2.0 * sup_u / h
    R = sl.xi_search_radius(model, sup_u, 0.0, h)
    assert abs(R - np.sqrt(2.0 * bound)) < 1e-6 * np.sqrt(2.0 * bound)


def test_xi_search_radius_linear_growth():
    model = sl.bethe_salpeter(1)
    assert sl.xi_search_radius(model, 10.0, 1.0, 0.01) == 1.0 / np.sqrt(2.0)


def test_conjugate_broadcasts_per_node():
    model = sl.schrodinger(1, sl.quadratic_potential(2.0))
    x = np.array([[-1.0], [0.0], [1.0]])
    out = sl.legendre_transform(model, x, 0.0, np.array([1.0]))
    want = 0.5 - 0.5 * 4.0 * x[:, 0] ** 2
    assert np.allclose(out, want)

"""Measure projection, push-forward, and weak-star probes."""

import numpy as np
import pytest

import semilag as sl
from semilag.measure import (
    Atoms,
    DensityCallback,
    PiecewiseConstant,
    build_pushforward,
    mass,
    probe_dictionary,
    project_measure,
    pushforward,
    tail_mass,
    weak_star_distance,
)


def _spec(k=0.1):
    return sl.make_spec(1, k, [-1.0], [1.0], 0.5)


def test_atoms_projection_half_open_cells():
    spec = _spec()
    m = project_measure(spec, Atoms(atoms=[([0.32], 2.0), ([0.0], 1.0)]))
    assert mass(m) == pytest.approx(3.0)
    pos = m.positions()[:, 0]
    assert set(np.round(pos, 10)) == {0.0, 0.3}
    # a boundary atom belongs to the upper cell
    mb = project_measure(spec, Atoms(atoms=[([0.35], 1.0)]))
    assert mb.positions()[0, 0] == pytest.approx(0.4)


def test_uniform_projection_exact_mass():
    spec = _spec()
    m = project_measure(spec, PiecewiseConstant(pieces=[([-1.0], [1.0], 1.0)]))
    assert mass(m) == pytest.approx(2.0, abs=1e-12)
    assert m.initial_mass == pytest.approx(2.0, abs=1e-12)


def test_density_callback_midpoint():
    spec = sl.make_spec(1, 0.01, [-5.0], [5.0], 0.5)
    m = project_measure(spec, DensityCallback(
        density=lambda x: np.exp(-x[:, 0] ** 2)))
    assert mass(m) == pytest.approx(np.sqrt(np.pi), abs=1e-6)


def test_unsupported_measure():
    with pytest.raises(sl.UnsupportedMeasure):
        project_measure(_spec(), "not a measure")


def test_tail_mass():
    spec = _spec()
    m = project_measure(spec, Atoms(atoms=[([0.9], 1.0), ([0.0], 2.0)]))
    assert tail_mass(m, 0.5) == pytest.approx(1.0)


def _evolved(N=3):
    spec = sl.make_spec(1, 0.01, [-1.0], [1.0], 0.5)
    model = sl.schrodinger(1)
    u0 = sl.project(spec, lambda x: 0.5 * x[:, 0] ** 2)
    sol = sl.solve(u0, model, sl.HjSolverConfig(h=0.05, N=N))
    m0 = project_measure(spec, PiecewiseConstant(pieces=[([-0.8], [0.8], 1.0)]))
    fcfg = sl.make_flow_config(model, 0.05, 0.2, 1.0, 1)
    ens = sl.evolve(m0.positions(), sol, model, fcfg, seed_indices=m0.indices)
    return spec, m0, ens


def test_pushforward_columns_and_mass():
    spec, m0, ens = _evolved()
    for n in range(ens.n_levels + 1):
        mat = build_pushforward(ens, n, spec)
        assert np.max(np.abs(mat.column_sums() - 1.0)) < 1e-12
        mn = pushforward(m0, mat)
        assert abs(mass(mn) - mass(m0)) <= 1e-12  # fsum over convex weights
        assert mn.initial_mass == m0.initial_mass


def test_pushforward_identity_at_level_zero():
    spec, m0, ens = _evolved()
    mat = build_pushforward(ens, 0, spec)
    m_same = pushforward(m0, mat)
    assert np.array_equal(m_same.indices, m0.indices)
    assert np.allclose(m_same.weights, m0.weights)


def test_missing_trajectory():
    spec, m0, ens = _evolved()
    mat = build_pushforward(ens, 1, spec)
    other = sl.DiscreteMeasure(spec, np.array([0]), np.array([1.0]), 1.0)
    with pytest.raises(sl.MissingTrajectory):
        pushforward(other, mat)


def test_ensemble_without_indices_rejected():
    spec, m0, ens = _evolved()
    ens.seed_indices = None
    with pytest.raises(sl.MissingTrajectory):
        build_pushforward(ens, 1, spec)


def test_weak_star_distance_properties():
    spec = _spec(k=0.05)
    probes = probe_dictionary(spec)
    a = project_measure(spec, Atoms(atoms=[([0.0], 1.0)]))
    b = project_measure(spec, Atoms(atoms=[([0.4], 1.0)]))
    assert weak_star_distance(a, a, probes) == 0.0
    d_ab = weak_star_distance(a, b, probes)
    assert d_ab > 0.0
    assert d_ab == weak_star_distance(b, a, probes)


def test_measure_csv(tmp_path):
    spec = _spec()
    m = project_measure(spec, Atoms(atoms=[([0.0], 1.5)]))
    path = tmp_path / "m.csv"
    sl.measure_to_csv(m, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,x0,weight"
    assert lines[1].endswith("1.5")

"""Implicit characteristics: fixed points, guards, and stability bounds."""

import numpy as np
import pytest

import semilag as sl
from semilag.flow import (
    FlowConfig,
    _implicit_step_full,
    estimate_contraction_constant,
    evolve,
    explicit_step,
    implicit_step,
    interpolate_trajectory,
    make_flow_config,
)


class LinearCompressive:
    """Analytic stand-in with grad u_eps(y) = -y (fixed point x/(1+h))."""

    def gradient(self, pts):
        return -np.asarray(pts)


def test_implicit_step_analytic_fixed_point():
    model = sl.schrodinger(1)
    cfg = FlowConfig(h=0.1, eps=0.5)
    x = np.array([[1.0], [-0.3], [2.0]])
    y = implicit_step(x, LinearCompressive(), model, cfg)
    assert np.max(np.abs(y - x / 1.1)) <= 1e-10


def test_state_velocity_consistency_exact():
    model = sl.schrodinger(1)
    cfg = FlowConfig(h=0.1, eps=0.5)
    x = np.array([[0.7]])
    y, vel, _ = _implicit_step_full(x, LinearCompressive(), model, cfg)
    assert np.array_equal(y, x + cfg.h * vel)


def test_contraction_guard_raises():
    model = sl.schrodinger(1)
    with pytest.raises(sl.NoContraction):
        make_flow_config(model, h=0.5, eps=0.1, lip_u=2.0, dim=1)
    fc = make_flow_config(model, h=0.01, eps=0.2, lip_u=2.0, dim=1)
    expected = estimate_contraction_constant(model, 2.0, 1) * 0.01 / 0.2
    assert fc.contraction_guard == pytest.approx(expected)
    assert fc.contraction_guard < 1.0


def test_no_contraction_when_iteration_budget_exhausted():
    model = sl.schrodinger(1)
    cfg = FlowConfig(h=0.1, eps=0.5, fp_max_iter=1, fp_tol=1e-15)
    with pytest.raises(sl.NoContraction, match="missed tolerance"):
        implicit_step(np.array([[1.0]]), LinearCompressive(), model, cfg)


def _compressive_solution(k=0.005, h=0.02, N=10):
    spec = sl.make_spec(1, k, [-2.0], [2.0], 1.0)
    model = sl.schrodinger(1)
    u0 = sl.project(spec, lambda x: -np.abs(x[:, 0]))
    sol = sl.solve(u0, model, sl.HjSolverConfig(h=h, N=N))
    return spec, model, sol


def test_evolve_filippov_compressive():
    # exact flow of a = -sign(x): X(t;x) = sign(x) max(|x| - t, 0)
    spec, model, sol = _compressive_solution()
    h, eps = 0.02, 0.15
    fcfg = make_flow_config(model, h, eps, 1.0, 1)
    seeds = np.array([[0.8], [-0.5], [0.3]])
    ens = evolve(seeds, sol, model, fcfg)
    T = 10 * h
    exact = np.sign(seeds) * np.maximum(np.abs(seeds) - T, 0.0)
    # smoothing slows the flow only within eps of the kink
    assert np.max(np.abs(ens.states[-1] - exact)) < eps
    # consistency of stored states and velocities
    assert np.array_equal(ens.states[1:], ens.states[:-1] + h * ens.velocities)


def test_stab1_pairwise_bound():
    spec, model, sol = _compressive_solution()
    h, eps, T = 0.02, 0.15, 0.2
    fcfg = make_flow_config(model, h, eps, 1.0, 1)
    rng = np.random.default_rng(13)
    seeds = rng.uniform(-1.5, 1.5, (40, 1))
    ens = evolve(seeds, sol, model, fcfg)
    sf = sl.SmoothedField(sol.fields[0], eps)
    pairs = sl.sample_pairs(spec, 300, spec.k, np.random.default_rng(14))
    c_prime = max(sl.osl_constant(sf, model, pairs, spec.k), 0.0)
    delta = 1.0 - c_prime * h
    bound = np.exp(c_prime * T / delta)
    for n in range(ens.n_levels + 1):
        d0 = np.abs(seeds[:, None, 0] - seeds[None, :, 0])
        dn = np.abs(ens.states[n][:, None, 0] - ens.states[n][None, :, 0])
        assert np.all(dn <= bound * np.maximum(d0, spec.k) + 1e-9)


def test_explicit_pair_separation_bound():
    # explicit pairs may separate, but never beyond the quadratic bound
    spec, model, sol = _compressive_solution()
    h, eps, T = 0.02, 0.15, 0.2
    fcfg = make_flow_config(model, h, eps, 1.0, 1)
    seeds = np.array([[-0.04], [0.04], [-0.01], [0.01]])
    ens = evolve(seeds, sol, model, fcfg, explicit=True)
    speed = float(np.max(np.abs(ens.velocities)))
    sf = sl.SmoothedField(sol.fields[0], eps)
    pairs = sl.sample_pairs(spec, 300, spec.k, np.random.default_rng(15))
    c = max(sl.osl_constant(sf, model, pairs, spec.k), 0.0)
    for n in range(ens.n_levels + 1):
        d0 = (seeds[:, None, 0] - seeds[None, :, 0]) ** 2
        dn = (ens.states[n][:, None, 0] - ens.states[n][None, :, 0]) ** 2
        assert np.all(dn <= np.exp(2 * c * T) * (d0 + 8.0 * speed ** 2 * T * h) + 1e-12)


def test_explicit_step_matches_formula():
    model = sl.schrodinger(1)
    cfg = FlowConfig(h=0.1, eps=0.5)
    x = np.array([[0.4]])
    y = explicit_step(x, LinearCompressive(), model, cfg)
    assert y[0, 0] == pytest.approx(0.4 * 0.9)


def test_interpolate_trajectory_linear_in_time():
    model = sl.schrodinger(1)
    spec, _, sol = _compressive_solution(N=5)
    fcfg = make_flow_config(model, 0.02, 0.15, 1.0, 1)
    ens = evolve(np.array([[0.9]]), sol, model, fcfg)
    mid = interpolate_trajectory(ens, 0, 0.03)
    expect = 0.5 * (ens.states[1, 0] + ens.states[2, 0])
    assert np.allclose(mid, expect)
    with pytest.raises(ValueError):
        interpolate_trajectory(ens, 0, 1.0)

"""Diagnostics: curvature constants, OSL estimates, rates, and errors."""

import numpy as np
import pytest

import semilag as sl
from semilag.diagnostics import (
    discrete_semiconcavity_constant,
    gradient_error,
    osl_constant,
    rate_regression,
    sample_pairs,
    sup_error,
)


def test_semiconcavity_quadratic_is_one():
    spec = sl.make_spec(1, 0.05, [-1.0], [1.0], 0.2)
    u = sl.project(spec, lambda x: 0.5 * x[:, 0] ** 2)
    assert discrete_semiconcavity_constant(u) == pytest.approx(1.0, abs=1e-9)


def test_semiconcavity_neg_abs_nonpositive():
    spec = sl.make_spec(1, 0.05, [-1.0], [1.0], 0.2)
    u = sl.project(spec, lambda x: -np.abs(x[:, 0]))
    assert discrete_semiconcavity_constant(u) <= 1e-9


def test_semiconcavity_2d_quadratic():
    spec = sl.make_spec(2, 0.1, [-1.0, -1.0], [1.0, 1.0], 0.0)
    u = sl.project(spec, lambda x: 0.5 * np.sum(x * x, axis=1))
    assert discrete_semiconcavity_constant(u) == pytest.approx(1.0, abs=1e-9)


def test_osl_constant_linear_field():
    # a(x, grad u(x)) = -x has one-sided Lipschitz constant exactly -1
    class G:
        def gradient(self, pts):
            return -np.asarray(pts)

    spec = sl.make_spec(1, 0.05, [-1.0], [1.0], 0.0)
    model = sl.schrodinger(1)
    pairs = sample_pairs(spec, 200, 0.05, np.random.default_rng(21))
    c = osl_constant(G(), model, pairs, 0.05)
    assert c == pytest.approx(-1.0, abs=1e-12)


def test_sample_pairs_respects_min_sep():
    spec = sl.make_spec(1, 0.05, [-1.0], [1.0], 0.0)
    x, y = sample_pairs(spec, 300, 0.1, np.random.default_rng(22))
    assert np.min(np.linalg.norm(x - y, axis=1)) >= 0.1


def test_sup_error_interior_only():
    spec = sl.make_spec(1, 0.1, [-1.0], [1.0], 0.5)
    vals = np.zeros(spec.n_nodes)
    vals[0] = 100.0  # padded node must not count
    u = sl.LatticeField(spec, vals)
    assert sup_error(u, lambda p: np.zeros(p.shape[0])) == 0.0


def test_rate_regression_recovers_slope():
    hs = [0.2, 0.1, 0.05, 0.025]
    pairs = [(h, 3.0 * h ** 2) for h in hs]
    assert rate_regression(pairs) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(sl.DegenerateFit):
        rate_regression(pairs[:2])
    with pytest.raises(sl.DegenerateFit):
        rate_regression([(h, 0.0) for h in hs])
    with pytest.raises(sl.DegenerateFit):
        rate_regression([(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)])


def test_gradient_error_with_kink_standoff():
    spec = sl.make_spec(1, 0.005, [-1.0], [1.0], 1.0)
    u = sl.project(spec, lambda x: -np.abs(x[:, 0]))
    sf = sl.SmoothedField(u, 0.25)
    samples = np.linspace(-0.9, 0.9, 50)
    err = gradient_error(sf, lambda p: -np.sign(p), samples,
                         kinks=[np.zeros(1)], standoff=0.3)
    assert err < 1e-3
    with pytest.raises(ValueError):
        gradient_error(sf, lambda p: -np.sign(p), samples,
                       kinks=[np.zeros(1)], standoff=10.0)

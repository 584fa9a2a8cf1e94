import numpy as np
import pytest
from numpy.testing import assert_allclose

from kossakowski.simplex import in_lhs_batch, in_lhs_gradient, maximize_in_lhs, project_simplex, simplex_starts


def test_project_simplex_examples():
    assert_allclose(project_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
    assert_allclose(project_simplex(np.array([1.0, 1.0, 1.0])), np.full(3, 1 / 3))
    assert_allclose(project_simplex(np.array([0.2, 0.3, 0.5])), [0.2, 0.3, 0.5])
    assert_allclose(project_simplex(np.array([-1.0, 0.5, 0.5])), [0.0, 0.5, 0.5])


def test_project_simplex_batched(rng):
    v = rng.standard_normal((7, 5, 4)) * 3
    p = project_simplex(v)
    assert p.shape == v.shape
    assert np.all(p >= 0)
    assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)
    # the projection is idempotent
    assert_allclose(project_simplex(p), p, atol=1e-12)


def test_simplex_starts_order(rng):
    starts = simplex_starts(3, 10, rng)
    assert starts.shape == (10, 3)
    assert_allclose(starts[0], np.full(3, 1 / 3))
    assert_allclose(starts[1:4], np.eye(3))
    assert_allclose(starts[4], [0.5, 0.5, 0.0])
    assert_allclose(starts.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(starts >= 0)


def test_simplex_starts_skip_repeated_points(rng):
    starts = simplex_starts(2, 5, rng)
    # the midpoint of the only edge is the barycenter
    assert_allclose(starts[:3], [[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]])
    assert len(np.unique(starts, axis=0)) == 5


def test_simplex_starts_truncates(rng):
    starts = simplex_starts(6, 3, rng)
    assert starts.shape == (3, 6)
    assert_allclose(starts[1], np.eye(6)[0])


def test_in_lhs_batch_zero_over_zero():
    a = np.zeros((1, 2, 2))
    # p_1 = 0 and B_1 = 0, the term contributes 0
    assert in_lhs_batch(a, np.array([[[1.0, 0.0]]]))[0, 0] == 1.0


def test_in_lhs_gradient_matches_finite_differences(rng):
    a = rng.uniform(0, 2, (1, 4, 4))
    p = rng.dirichlet(np.ones(4), size=(1, 1))
    g = in_lhs_gradient(a, p)[0, 0]
    h = 1e-6
    for k in range(4):
        dp = np.zeros_like(p)
        dp[..., k] = h
        fd = (in_lhs_batch(a, p + dp) - in_lhs_batch(a, p - dp))[0, 0] / (2 * h)
        assert g[k] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_maximize_finds_known_maximum():
    # circulant (0, 1, 1) on n=3 (the reduction map) has max LHS exactly 1 at the barycenter and vertices
    a = np.ones((3, 3)) - np.eye(3)
    res = maximize_in_lhs(a[None], simplex_starts(3, 7, np.random.default_rng(0)), iterations=200)
    assert res.best_value[0] == pytest.approx(1.0, abs=1e-9)


def test_maximize_detects_violation():
    # a = 0.5 everywhere: at the barycenter B_i = 1/3 + 1/2, LHS = 1/(5/6) > 1
    a = np.full((1, 3, 3), 0.5)
    res = maximize_in_lhs(a, simplex_starts(3, 10, np.random.default_rng(0)), iterations=300)
    assert res.best_value[0] >= 1.2 - 1e-9
    assert_allclose(res.best_point.sum(axis=-1), 1.0, atol=1e-12)


def test_maximize_values_never_decrease(rng):
    a = rng.uniform(0, 2, (3, 4, 4))
    starts = simplex_starts(4, 12, rng)
    f0 = in_lhs_batch(a, np.broadcast_to(starts, (3, 12, 4)))
    res = maximize_in_lhs(a, starts, iterations=50)
    assert np.all(res.values >= f0 - 1e-15)
    assert res.iterations <= 50
    assert res.converged.shape == (3, 12)
    assert res.iterations == res.steps.max()


def test_maximize_batch_matches_single_maps(rng):
    a = rng.uniform(0, 2, (4, 3, 3))
    starts = simplex_starts(3, 16, rng)
    batch = maximize_in_lhs(a, starts, iterations=200)
    for m in range(4):
        single = maximize_in_lhs(a[m : m + 1], starts, iterations=200)
        # a restart runs for as many steps as it would alone
        np.testing.assert_array_equal(single.steps[0], batch.steps[m])
        assert_allclose(single.values[0], batch.values[m], rtol=0, atol=1e-15)


def test_maximize_stops_restarts_at_a_vertex():
    # the reduction map has zero gradient at every vertex, where f = 1
    a = (np.ones((3, 3)) - np.eye(3))[None]
    res = maximize_in_lhs(a, np.eye(3), iterations=100)
    assert res.converged.all()
    assert res.steps.max() == 1
    assert_allclose(res.values, 1.0)

import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from distoco.problem import (AffineConstraint, DecisionSet, QuadraticRegressionLoss,
                             UnsupportedSetError, clipped_subgradient, clipped_value,
                             generate_regression_stream, project, shrink_set)

finite = st.floats(-1e3, 1e3, allow_nan=False)


# --- decision sets and projection -------------------------------------------------

def test_project_box_clamps():
    box = DecisionSet.box(-5, 5, 2)
    np.testing.assert_array_equal(project(box, [6, -8]), [5, -5])
    np.testing.assert_array_equal(project(box, [1, 2]), [1, 2])


def test_project_ball_scales_radially():
    ball = DecisionSet.ball(1.0, 2)
    np.testing.assert_allclose(project(ball, [3, 4]), [0.6, 0.8], atol=1e-15)
    np.testing.assert_array_equal(project(ball, [0.1, 0.2]), [0.1, 0.2])


def test_project_dimension_mismatch():
    with pytest.raises(ValueError):
        project(DecisionSet.box(-1, 1, 3), [1.0, 2.0])


def test_box_radii():
    box = DecisionSet.box(-5, 5, 4)
    assert box.inner_radius == 5.0
    assert box.outer_radius == pytest.approx(10.0)
    assert box.inner_radius <= box.outer_radius


@given(arrays(float, 3, elements=finite), st.sampled_from(["box", "ball"]))
def test_project_idempotent_and_inside(x, kind):
    s = DecisionSet.box(-5, 5, 3) if kind == "box" else DecisionSet.ball(2.0, 3)
    y = project(s, x)
    assert s.contains(y, 1e-12)
    if kind == "box":
        np.testing.assert_array_equal(project(s, y), y)
    else:
        np.testing.assert_allclose(project(s, y), y, rtol=1e-15, atol=1e-15)


@given(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite),
       st.sampled_from(["box", "ball"]))
def test_project_nonexpansive(x, y, kind):
    s = DecisionSet.box(-5, 5, 3) if kind == "box" else DecisionSet.ball(2.0, 3)
    d = np.linalg.norm(project(s, x) - project(s, y))
    assert d <= np.linalg.norm(x - y) * (1 + 1e-12) + 1e-12


@given(st.floats(0.01, 0.99), st.sampled_from(["box", "ball"]))
def test_shrunk_set_inside_and_radii_scale(xi, kind):
    s = DecisionSet.box(-5, 5, 3) if kind == "box" else DecisionSet.ball(2.0, 3)
    sh = shrink_set(s, xi)
    assert sh.inner_radius == pytest.approx((1 - xi) * s.inner_radius)
    assert sh.outer_radius == pytest.approx((1 - xi) * s.outer_radius)


def test_shrink_set_examples():
    sh = shrink_set(DecisionSet.box(-5, 5, 3), 0.5)
    np.testing.assert_array_equal(sh.lower, [-2.5] * 3)
    np.testing.assert_array_equal(sh.upper, [2.5] * 3)
    assert shrink_set(DecisionSet.ball(1.0, 2), 1 / (1 + 1)).radius == 0.5
    with pytest.raises(ValueError):
        shrink_set(DecisionSet.box(-5, 5, 2), 0.0)
    with pytest.raises(ValueError):
        shrink_set(DecisionSet.box(-5, 5, 2), 1.0)


def test_shrink_rejects_asymmetric_sets():
    with pytest.raises(UnsupportedSetError):
        shrink_set(DecisionSet.box(0, 1, 2), 0.5)
    with pytest.raises(UnsupportedSetError):
        shrink_set(DecisionSet.ball(1.0, 2, center=[0.5, 0]), 0.5)


# --- clipping ------------------------------------------------------------------------

def test_clipped_value_examples():
    np.testing.assert_array_equal(clipped_value([1, -2, 0]), [1, 0, 0])
    np.testing.assert_array_equal(clipped_value([-1, -3]), [0, 0])
    np.testing.assert_array_equal(clipped_value([0.5, 3]), [0.5, 3])


@given(arrays(float, 5, elements=finite))
def test_clipped_value_properties(g):
    c = clipped_value(g)
    assert np.all(c >= 0)
    assert np.all(c[g >= 0] >= g[g >= 0])


def test_clipped_subgradient_branches():
    g = AffineConstraint(np.array([[1.0]]), np.array([1.0]))
    np.testing.assert_array_equal(clipped_subgradient(g, np.array([0.0])), [[0.0]])
    np.testing.assert_array_equal(clipped_subgradient(g, np.array([2.0])), [[1.0]])
    # boundary g = 0 takes the gradient branch
    np.testing.assert_array_equal(clipped_subgradient(g, np.array([1.0])), [[1.0]])


def test_clipped_subgradient_mixed_columns():
    g = AffineConstraint(np.array([[1.0, 0.0], [0.0, -1.0]]), np.array([1.0, 1.0]))
    J = clipped_subgradient(g, np.array([2.0, 0.0]))
    np.testing.assert_array_equal(J, [[1.0, 0.0], [0.0, 0.0]])


@given(st.integers(0, 2 ** 32 - 1))
def test_clipped_subgradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    p, m = 3, 4
    con = AffineConstraint(rng.uniform(-1, 1, (m, p)), rng.uniform(-1, 1, m))
    x = rng.uniform(-2, 2, p)
    J = clipped_subgradient(con, x)
    h = 1e-6
    for j in range(m):
        if abs(con.value(x)[j]) <= 1e-3:
            continue
        fd = np.array([(max(con.value(x + h * e)[j], 0) - max(con.value(x - h * e)[j], 0)) / (2 * h)
                       for e in np.eye(p)])
        np.testing.assert_allclose(J[:, j], fd, atol=1e-6)


# --- oracles ----------------------------------------------------------------------------

def test_quadratic_loss_value_and_gradient(rng):
    H, z = rng.standard_normal((4, 3)), rng.standard_normal(4)
    f = QuadraticRegressionLoss(H, z)
    x = rng.standard_normal(3)
    assert f.value(x) == pytest.approx(0.5 * np.sum((H @ x - z) ** 2))
    np.testing.assert_allclose(f.gradient(x), H.T @ (H @ x - z))


def test_affine_jacobian_is_transpose(rng):
    A = rng.standard_normal((2, 3))
    g = AffineConstraint(A, rng.standard_normal(2))
    np.testing.assert_array_equal(g.jacobian(np.zeros(3)), A.T)


def test_round_oracles_match_per_agent(rng):
    inst = generate_regression_stream(3, 2, 3, 2, 4, seed=5)
    ro = inst.round(2)
    X = rng.uniform(-5, 5, (3, 2))
    for i in range(3):
        assert ro.loss_values(X)[i] == pytest.approx(inst.loss(i, 2).value(X[i]))
        np.testing.assert_allclose(ro.loss_gradients(X)[i], inst.loss(i, 2).gradient(X[i]))
        np.testing.assert_allclose(ro.constraint_values(X)[i], inst.constraint(i, 2).value(X[i]))
        np.testing.assert_allclose(ro.constraint_jacobians(X)[i], inst.constraint(i, 2).jacobian(X[i]))


# --- generator -----------------------------------------------------------------------

def test_generator_is_deterministic():
    a = generate_regression_stream(4, 3, 2, 2, 10, seed=9)
    b = generate_regression_stream(4, 3, 2, 2, 10, seed=9)
    for name in ("H", "z", "A", "a"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    c = generate_regression_stream(4, 3, 2, 2, 10, seed=10)
    assert not np.array_equal(a.H, c.H)


def test_generator_prefix_stable():
    long = generate_regression_stream(3, 2, 2, 2, 20, seed=1)
    short = generate_regression_stream(3, 2, 2, 2, 5, seed=1)
    np.testing.assert_array_equal(long.H[:5], short.H)
    np.testing.assert_array_equal(long.a[:5], short.a)


def test_generator_distributions_and_origin_feasible():
    inst = generate_regression_stream(20, 4, 4, 2, 200, seed=0)
    assert inst.H.min() >= -1 and inst.H.max() <= 1
    assert inst.A.min() >= 0 and inst.A.max() <= 2
    assert inst.a.min() >= 0 and inst.a.max() <= 1
    eps = inst.z - inst.H @ np.ones(4)
    assert abs(eps.mean()) < 0.05 and abs(eps.std() - 1) < 0.05
    for t in (1, 100, 200):
        assert np.all(inst.global_constraint(t, np.zeros(4)) <= 0)
    assert inst.m == 40 and inst.m_i == [2] * 20


def test_full_size_configuration():
    inst = generate_regression_stream(100, 10, 4, 2, 2, seed=0)
    assert inst.H.shape == (2, 100, 4, 10)
    assert inst.decision_set.inner_radius == 5.0


def test_ridge_gives_strong_convexity():
    plain = generate_regression_stream(2, 4, 4, 2, 50, seed=0)
    ridge = generate_regression_stream(2, 4, 4, 2, 50, seed=0, ridge=1.0)
    assert ridge.constants.mu >= 1.0 - 1e-12
    assert ridge.constants.mu > plain.constants.mu
    x = np.ones(4)
    assert ridge.loss(0, 3).value(x) == pytest.approx(plain.loss(0, 3).value(x) + 0.5 * 4)


def test_constants_bound_random_points():
    inst = generate_regression_stream(3, 4, 4, 2, 30, seed=2)
    K = inst.constants
    rng = np.random.default_rng(0)
    X = rng.uniform(-5, 5, (10_000, 4))
    Y = rng.uniform(-5, 5, (10_000, 4))
    corners = inst.decision_set.corners()
    X = np.vstack([X, corners])
    Y = np.vstack([Y, corners[::-1]])
    for t in (1, 15, 30):
        for i in range(3):
            f, g = inst.loss(i, t), inst.constraint(i, t)
            fx = 0.5 * np.sum((X @ f.H.T - f.z) ** 2, axis=1)
            fy = 0.5 * np.sum((Y @ f.H.T - f.z) ** 2, axis=1)
            assert np.max(np.abs(fx - fy)) <= K.F1
            assert np.max(np.linalg.norm(X @ g.A.T - g.a, axis=1)) <= K.F1
            assert np.max(np.linalg.norm((X @ f.H.T - f.z) @ f.H, axis=1)) <= K.F2
            assert np.linalg.norm(g.A.T, 2) <= K.F2


def test_centralized_view_matches_global_functions(rng):
    inst = generate_regression_stream(3, 2, 2, 2, 5, seed=3)
    cen = inst.centralized()
    x = rng.uniform(-5, 5, 2)
    for t in (1, 5):
        assert cen.loss(0, t).value(x) == pytest.approx(inst.global_loss(t, x))
        np.testing.assert_allclose(cen.constraint(0, t).value(x), inst.global_constraint(t, x))


def test_dump_csv(tmp_path):
    inst = generate_regression_stream(2, 2, 2, 1, 3, seed=0)
    path = tmp_path / "inst.csv"
    inst.dump_csv(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["round", "agent", "matrix", "row", "col", "value"]
    got = {(int(r[0]), int(r[1]), r[2], int(r[3]), int(r[4])): float(r[5]) for r in rows[1:]}
    assert got[(2, 1, "H", 1, 0)] == inst.H[1, 1, 1, 0]
    assert got[(3, 0, "a", 0, 0)] == inst.a[2, 0, 0]

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import columns
from gradlab._types import GramMatrix, GradWeights, LossVector, TaskGradients, WeightConstraint
from gradlab.utils import (
    SingularSystem,
    gram,
    jacobi_eigh,
    min_norm_point,
    simplex_project,
    solve_linear,
    trace_identity,
)
from gradlab.utils._oracles import check_submultiplicative, check_trace_identity


@pytest.mark.parametrize(
    "cols, expected",
    [
        (((1, 0), (0, 1)), [[1, 0], [0, 1]]),
        (((2, 0), (0, 1)), [[4, 0], [0, 1]]),
        (((3, 4), (3, 4)), [[25, 25], [25, 25]]),
    ],
)
def test_gram_examples(cols, expected):
    assert_allclose(gram(columns(*cols)).entries, expected)


def test_gram_is_exactly_symmetric(rng):
    K = gram(TaskGradients(rng.standard_normal((40, 6)))).entries
    assert_array_equal(K, K.T)
    assert np.all(np.linalg.eigvalsh(K) > -1e-10)


def test_types_reject_bad_input():
    with pytest.raises(ValueError):
        TaskGradients(np.ones((3, 1)))
    with pytest.raises(ValueError):
        TaskGradients(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        GradWeights([0.2, 0.2], WeightConstraint.SIMPLEX)
    with pytest.raises(ValueError):
        GramMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        LossVector([1.0, np.inf])


@pytest.mark.parametrize(
    "y, expected",
    [((0.3, 0.7), (0.3, 0.7)), ((0.6, 0.6), (0.5, 0.5)), ((2.0, 0.0), (1.0, 0.0))],
)
def test_simplex_project_examples(y, expected):
    w = simplex_project(y)
    assert w.constraint is WeightConstraint.SIMPLEX
    assert_allclose(w.values, expected, atol=1e-12)


def test_simplex_project_is_idempotent(rng):
    for _ in range(20):
        w = simplex_project(rng.normal(size=5) * 3).values
        assert_allclose(simplex_project(w).values, w, atol=1e-12)


@pytest.mark.parametrize(
    "cols, alpha, direction",
    [
        (((1, 0), (0, 1)), (0.5, 0.5), (0.5, 0.5)),
        (((2, 1), (2, 1)), (0.5, 0.5), (2, 1)),
        (((1, 0), (3, 0)), (1.0, 0.0), (1, 0)),
    ],
)
def test_min_norm_point_examples(cols, alpha, direction):
    weights, d, converged = min_norm_point(columns(*cols))
    assert converged
    assert_allclose(weights.values, alpha, atol=1e-8)
    assert_allclose(d.entries, direction, atol=1e-8)


@pytest.mark.parametrize(
    "K, eigenvalues",
    [
        ([[1.0, 0.0], [0.0, 1.0]], (1.0, 1.0)),
        ([[2.0, 1.0], [1.0, 2.0]], (3.0, 1.0)),
        ([[4.0, 0.0], [0.0, 1.0]], (4.0, 1.0)),
    ],
)
def test_jacobi_examples(K, eigenvalues):
    lam, V = jacobi_eigh(np.array(K))
    assert_allclose(lam, eigenvalues, atol=1e-12)
    assert_allclose(V.T @ V, np.eye(2), atol=1e-12)


def test_jacobi_diagonal_eigenvectors_are_axes():
    _, V = jacobi_eigh(np.diag([4.0, 1.0]))
    assert_allclose(np.abs(V), np.eye(2), atol=1e-12)


def test_jacobi_matches_numpy(rng):
    for T in (3, 4, 7):
        K = gram(TaskGradients(rng.standard_normal((20, T)))).entries
        lam, V = jacobi_eigh(K)
        assert np.all(np.diff(lam) <= 0)
        assert_allclose(lam, np.linalg.eigvalsh(K)[::-1], rtol=1e-9, atol=1e-10)
        assert_allclose(V @ np.diag(lam) @ V.T, K, atol=1e-9)


@pytest.mark.parametrize(
    "A, b, x",
    [
        ([[1.0, 0.0], [0.0, 1.0]], (3.0, 4.0), (3.0, 4.0)),
        ([[2.0, 0.0], [0.0, 1.0]], (1.0, 1.0), (0.5, 1.0)),
    ],
)
def test_solve_linear_examples(A, b, x):
    assert_allclose(solve_linear(np.array(A), np.array(b)), x)


def test_solve_linear_singular():
    with pytest.raises(SingularSystem):
        solve_linear(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 2.0]))


def test_solve_linear_pivots(rng):
    A = np.array([[1e-14, 1.0], [1.0, 1.0]])
    assert_allclose(A @ solve_linear(A, np.array([1.0, 2.0])), (1.0, 2.0), atol=1e-12)
    A = rng.standard_normal((6, 6))
    b = rng.standard_normal(6)
    assert_allclose(solve_linear(A, b), np.linalg.solve(A, b), rtol=1e-9)


def test_trace_identity_single(rng):
    M, a, b = rng.standard_normal((10, 4)), rng.standard_normal(4), rng.standard_normal(4)
    lhs, rhs = trace_identity(M, a, b)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_identity_oracles():
    for row in (check_trace_identity(100, seed=3), check_submultiplicative(100, seed=3)):
        assert row["instances"] == 100
        assert row["failed"] == 0

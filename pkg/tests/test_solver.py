from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from commalign.exemplar import SolverError, hinge_objective, solve_soft_margin

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "svm_qp.json").read_text())


def test_two_point_problem_recovers_analytic_solution():
    """positive at (1,0), negative at (-1,0): theta = (1,0), bias = 0,
    both functional margins exactly 1 (hand KKT solution)."""
    pos = [(np.array([1.0, 0.0]), 1.0)]
    neg = [(np.array([-1.0, 0.0]), 1.0)]
    theta, bias = solve_soft_margin(pos, neg, C=1000.0, tol=1e-10)
    assert theta[0] == pytest.approx(1.0, abs=1e-6)
    assert theta[1] == pytest.approx(0.0, abs=1e-6)
    assert bias == pytest.approx(0.0, abs=1e-6)
    assert theta @ np.array([1.0, 0.0]) + bias == pytest.approx(1.0, abs=1e-6)
    assert -(theta @ np.array([-1.0, 0.0]) + bias) == pytest.approx(1.0, abs=1e-6)


def test_duplicate_positive_equals_merged_weight():
    rng = np.random.default_rng(3)
    pos_vec = rng.normal(size=4)
    negs = [(rng.normal(size=4) - 2.0, 1.0) for _ in range(5)]
    theta_dup, bias_dup = solve_soft_margin(
        [(pos_vec, 1.0), (pos_vec, 1.0)], negs, C=10.0, tol=1e-8
    )
    theta_merged, bias_merged = solve_soft_margin(
        [(pos_vec, 2.0)], negs, C=10.0, tol=1e-8
    )
    probe = rng.normal(size=(10, 4))
    np.testing.assert_allclose(
        probe @ theta_dup + bias_dup, probe @ theta_merged + bias_merged, atol=1e-4
    )


@pytest.mark.parametrize("idx", range(len(FIXTURES)))
def test_objective_matches_qp_oracle(idx):
    inst = FIXTURES[idx]
    X = np.array(inst["X"])
    y = np.array(inst["y"])
    weights = inst["weights"]
    pos = [(X[i], weights[i]) for i in range(len(y)) if y[i] > 0]
    neg = [(X[i], weights[i]) for i in range(len(y)) if y[i] < 0]
    theta, bias = solve_soft_margin(pos, neg, C=inst["C"], tol=1e-6)
    ours = hinge_objective(theta, bias, pos, neg, inst["C"])
    assert ours == pytest.approx(inst["objective"], rel=1e-4)


def test_objective_no_worse_than_zero_vector():
    rng = np.random.default_rng(11)
    for trial in range(5):
        X = rng.normal(size=(12, 6))
        pos = [(X[i], 1.0 + i) for i in range(6)]
        neg = [(X[i], 1.0) for i in range(6, 12)]
        C = 5.0
        theta, bias = solve_soft_margin(pos, neg, C=C)
        zero_objective = C * sum(w for _, w in pos + neg)
        assert hinge_objective(theta, bias, pos, neg, C) <= zero_objective + 1e-9


def test_scaling_covariance():
    """Scaling C by s and all weights by 1/s leaves decision values unchanged."""
    rng = np.random.default_rng(7)
    X = rng.normal(size=(14, 5))
    y = np.where(X[:, 0] > 0, 1, -1)
    pos = [(X[i], 2.0) for i in range(14) if y[i] > 0]
    neg = [(X[i], 2.0) for i in range(14) if y[i] < 0]
    theta1, bias1 = solve_soft_margin(pos, neg, C=10.0, tol=1e-8, seed=5)
    s = 4.0
    pos_s = [(v, w / s) for v, w in pos]
    neg_s = [(v, w / s) for v, w in neg]
    theta2, bias2 = solve_soft_margin(pos_s, neg_s, C=10.0 * s, tol=1e-8, seed=5)
    probe = rng.normal(size=(20, 5))
    np.testing.assert_allclose(
        probe @ theta1 + bias1, probe @ theta2 + bias2, atol=1e-6
    )


def test_deterministic_given_seed():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(10, 4))
    pos = [(X[i] + 1.0, 1.0) for i in range(5)]
    neg = [(X[i] - 1.0, 1.0) for i in range(5, 10)]
    theta_a, bias_a = solve_soft_margin(pos, neg, C=50.0, seed=123)
    theta_b, bias_b = solve_soft_margin(pos, neg, C=50.0, seed=123)
    assert np.array_equal(theta_a, theta_b)
    assert bias_a == bias_b


def test_rejects_non_finite_features():
    pos = [(np.array([1.0, np.nan]), 1.0)]
    neg = [(np.array([-1.0, 0.0]), 1.0)]
    with pytest.raises(ValueError, match="non-finite"):
        solve_soft_margin(pos, neg, C=1.0)


def test_requires_both_classes():
    with pytest.raises(ValueError, match="at least one"):
        solve_soft_margin([], [(np.zeros(2), 1.0)], C=1.0)


def test_iteration_cap_raises_with_diagnostics():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 8))
    pos = [(X[i] + 0.1, 1.0) for i in range(15)]
    neg = [(X[i] - 0.1, 1.0) for i in range(15, 30)]
    with pytest.raises(SolverError, match="duality gap"):
        solve_soft_margin(pos, neg, C=100.0, tol=1e-12, max_steps=30)

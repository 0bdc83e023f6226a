import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weaksub.errors import DegenerateResidual, InstanceValidationError
from weaksub.set_functions import (
    AOptimalObjective,
    CoverageFunction,
    DesignInstance,
    ModularFunction,
    R2Objective,
    RegressionInstance,
    TableFunction,
    WorstCaseInstance,
    WorstCaseObjective,
    aopt_value,
    generate_design_instance,
    generate_regression_instance,
    mask_to_indices,
    r2_value,
    random_coverage,
    random_monotone_table,
    residual_instance,
    test_function_value as tf_value,
    to_mask,
)


def instance_from_data(Z):
    """Standardize columns (target last) and form the correlation instance."""
    Z = (Z - Z.mean(0)) / Z.std(0)
    m = Z.shape[0]
    X, y = Z[:, :-1], Z[:, -1]
    return RegressionInstance(X.T @ X / m, X.T @ y / m), X, y


def lstsq_r2(X, y, S):
    if not S:
        return 0.0
    coef, *_ = np.linalg.lstsq(X[:, S], y, rcond=None)
    resid = y - X[:, S] @ coef
    return 1.0 - resid @ resid / (y @ y)


def test_r2_matches_least_squares_fit():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((80, 6)) @ (np.eye(6) + 0.5 * rng.standard_normal((6, 6)))
    inst, X, y = instance_from_data(Z)
    for k in range(6):
        for S in combinations(range(5), k):
            assert r2_value(inst, S) == pytest.approx(lstsq_r2(X, y, list(S)), abs=1e-10)


def test_suppressor_example_values():
    r = 1 / math.sqrt(2)
    f = R2Objective(RegressionInstance([[1, r], [r, 1]], [0, r]))
    assert f([0]) == pytest.approx(0.0, abs=1e-15)
    assert f([1]) == pytest.approx(0.5)
    assert f([0, 1]) == pytest.approx(1.0)
    assert f.marginal(0, [1]) == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.integers(0, 10_000), st.data())
def test_residual_decomposition(n, seed, data):
    inst = generate_regression_instance(n, 6 * n, 0.5, seed)
    A = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n - 1, unique=True))
    res = residual_instance(inst, A)
    rest = [i for i in range(n) if i not in A]
    assert np.allclose(np.diag(res.C), 1.0)
    rA = r2_value(inst, A)
    T = data.draw(st.lists(st.integers(0, len(rest) - 1), unique=True))
    S = [rest[t] for t in T]
    assert r2_value(inst, A + S) == pytest.approx(rA + (1 - rA) * r2_value(res, T), abs=1e-9)


def test_residual_of_empty_set_is_identity_and_degenerate_raises():
    inst = generate_regression_instance(3, 30, 0.5, 1)
    assert residual_instance(inst, []) is inst
    dup = RegressionInstance(np.ones((2, 2)), [0.5, 0.5])
    with pytest.raises(DegenerateResidual):
        residual_instance(dup, [0])


@pytest.mark.parametrize(
    "C,b",
    [
        ([[2.0, 0.0], [0.0, 1.0]], [0, 0]),  # not unit diagonal
        ([[1.0, 0.5], [0.2, 1.0]], [0, 0]),  # asymmetric
        ([[1.0, 0.0], [0.0, 1.0]], [0.9, 0.9]),  # target over-explained
        ([[1.0]], [0.1, 0.2]),  # shape mismatch
    ],
)
def test_regression_instance_validation(C, b):
    with pytest.raises(InstanceValidationError):
        RegressionInstance(C, b)


def test_generated_regression_is_valid_and_reproducible():
    a = generate_regression_instance(5, 40, 0.3, 7)
    b = generate_regression_instance(5, 40, 0.3, 7)
    assert np.array_equal(a.C, b.C) and np.array_equal(a.b, b.b)
    assert 0 <= r2_value(a, range(5)) <= 1


def aopt_direct(inst, S):
    S = list(S)
    if not S:
        return 0.0
    XS = inst.X[:, S]
    post = np.linalg.inv(np.linalg.inv(inst.Lambda) + XS @ XS.T / inst.sigma2)
    return np.trace(inst.Lambda) - np.trace(post)


def test_aopt_value_matches_direct_formula():
    inst = generate_design_instance(3, 6, 2)
    f = AOptimalObjective(inst)
    for k in range(7):
        for S in combinations(range(6), k):
            assert f(S) == pytest.approx(aopt_direct(inst, S), abs=1e-10)
            assert aopt_value(inst, S) == pytest.approx(f(S), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(2, 7), st.integers(0, 10_000))
def test_aopt_is_monotone_and_bounded(p, n, seed):
    inst = generate_design_instance(p, n, seed)
    f = AOptimalObjective(inst)
    vals = f.table()
    for mask in range(1 << n):
        for e in range(n):
            assert vals[mask | (1 << e)] >= vals[mask] - 1e-12
    assert vals[-1] <= np.trace(inst.Lambda) + 1e-12


def test_design_instance_validation():
    with pytest.raises(InstanceValidationError):
        DesignInstance(np.ones((2, 3)), np.eye(2), 0.0)
    with pytest.raises(InstanceValidationError):
        DesignInstance(np.ones((2, 3)), np.zeros((2, 2)), 1.0)
    with pytest.raises(InstanceValidationError):
        DesignInstance(np.ones((2, 3)), np.eye(3), 1.0)


def test_worst_case_sequence():
    inst = WorstCaseInstance(3, 0.5)
    assert inst.x.tolist() == pytest.approx([0.0, 1 / 6, 0.375, 1.0])
    f = WorstCaseObjective(inst)
    assert f([2]) == f([0]) == pytest.approx(1 / 6)
    with pytest.raises(InstanceValidationError):
        WorstCaseInstance(3, 0.0)


def test_coverage_and_modular_match_plain_evaluation():
    rng = np.random.default_rng(4)
    cov = random_coverage(6, 12, rng)
    mod = ModularFunction(rng.uniform(0, 1, 6))
    for S in [(), (0,), (1, 3), (0, 2, 4, 5)]:
        assert cov(S) == pytest.approx(tf_value("coverage", {"sets": cov.sets, "weights": cov.weights}, S))
        assert mod(S) == pytest.approx(tf_value("modular", {"weights": mod.weights}, S))
    with pytest.raises(InstanceValidationError):
        CoverageFunction([[0, 5]], [1.0, 1.0])


def test_random_monotone_table_is_normalized_and_monotone():
    f = random_monotone_table(6, 3)
    v = f.table()
    assert v[0] == 0 and v[-1] == pytest.approx(1.0)
    for mask in range(64):
        for e in range(6):
            assert v[mask | (1 << e)] >= v[mask] - 1e-15
    with pytest.raises(InstanceValidationError):
        TableFunction([1.0, 2.0])


def test_call_counting_counts_memo_hits():
    f = ModularFunction([1.0, 2.0, 3.0])
    f([0, 1])
    f([1, 0])
    assert f.calls == 2 and f.evaluations == 1
    f.marginal(2, [0])
    assert f.calls == 4
    f.table()
    assert f.calls == 12 and f.evaluations == 7


def test_mask_helpers_roundtrip():
    assert mask_to_indices(to_mask([4, 0, 2])) == (0, 2, 4)
    with pytest.raises(ValueError):
        to_mask([3], n=3)

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weaksub import linalg
from weaksub.errors import GroundSetTooLarge
from weaksub.ratios import (
    aopt_bound,
    empirical_elementwise_gamma,
    empirical_ratios,
    pair_ratios,
    spectral_bounds,
)
from weaksub.set_functions import (
    AOptimalObjective,
    ModularFunction,
    R2Objective,
    RegressionInstance,
    TableFunction,
    WorstCaseInstance,
    WorstCaseObjective,
    generate_design_instance,
    generate_regression_instance,
    random_coverage,
    random_monotone_table,
)


def naive_ratios(f, max_b=None):
    """Loop over every pair with itertools, no tables."""
    n = f.n
    max_b = n if max_b is None else max_b
    gamma, beta = math.inf, -math.inf
    for size in range(1, max_b + 1):
        for B in combinations(range(n), size):
            for a in range(size):
                for A in combinations(B, a):
                    gain = f(B) - f(A)
                    if gain <= 1e-12:
                        continue
                    diff = [e for e in B if e not in A]
                    low = sum(f(A + (e,)) - f(A) for e in diff)
                    up = sum(f(B) - f(tuple(x for x in B if x != e)) for e in diff)
                    gamma = min(gamma, low / gain)
                    beta = max(beta, up / gain)
    return min(1.0, max(0.0, gamma)), beta


def naive_elementwise(f):
    n = f.n
    best = 1.0
    for size in range(n):
        for B in combinations(range(n), size):
            for e in range(n):
                if e in B:
                    continue
                den = f(B + (e,)) - f(B)
                if den <= 1e-12:
                    continue
                for a in range(size + 1):
                    for A in combinations(B, a):
                        best = min(best, (f(A + (e,)) - f(A)) / den)
    return max(0.0, best)


@pytest.mark.parametrize("seed", range(6))
def test_vectorized_ratios_match_naive_loops(seed):
    rng = np.random.default_rng(seed)
    f = [random_monotone_table(5, rng), random_coverage(5, 10, rng),
         R2Objective(generate_regression_instance(5, 30, 0.5, rng))][seed % 3]
    rep = empirical_ratios(f)
    g, b = naive_ratios(f)
    assert rep.gamma_hat == pytest.approx(g, abs=1e-12)
    assert rep.beta_hat == pytest.approx(b, abs=1e-12)
    assert rep.gamma_e_hat == pytest.approx(naive_elementwise(f), abs=1e-12)
    restricted = empirical_ratios(f, max_b=3, elementwise=False)
    g3, b3 = naive_ratios(f, 3)
    assert restricted.gamma_hat == pytest.approx(g3, abs=1e-12)
    assert restricted.beta_hat == pytest.approx(b3, abs=1e-12)


def test_witnesses_reproduce_reported_ratios():
    f = random_monotone_table(6, 1)
    rep = empirical_ratios(f)
    assert pair_ratios(f, *rep.gamma_witness)[0] == pytest.approx(rep.gamma_hat)
    assert pair_ratios(f, *rep.beta_witness)[1] == pytest.approx(rep.beta_hat)


def test_suppressor_example_ratios_and_witness():
    r = 1 / math.sqrt(2)
    rep = empirical_ratios(R2Objective(RegressionInstance([[1, r], [r, 1]], [0, r])))
    assert rep.gamma_hat == pytest.approx(0.5)
    assert rep.beta_hat == pytest.approx(1.5)
    assert rep.gamma_e_hat == pytest.approx(0.0, abs=1e-15)
    assert rep.gamma_witness == ((), (0, 1))
    assert rep.pair_count == 5


def test_zero_gain_pair_with_positive_upper_numerator_gives_infinite_beta():
    # monotone f cannot do this; a non-monotone table with f(X) = f(empty) and
    # negative two-element values makes (empty, X) zero-gain with upper numerator 3
    vals = np.zeros(8)
    vals[[0b011, 0b101, 0b110]] = -1.0
    rep = empirical_ratios(TableFunction(vals))
    assert math.isinf(rep.beta_hat) and rep.to_dict()["beta_hat"] == "inf"
    assert rep.beta_witness == ((), (0, 1, 2))


def test_zero_gain_pairs_do_not_constrain_monotone_ratios():
    rep = empirical_ratios(TableFunction([0.0, 1.0, 1.0, 1.0]))
    assert rep.beta_hat == pytest.approx(1.0)
    assert rep.gamma_hat == pytest.approx(1.0)


def test_submodular_and_modular_ratios_are_one():
    rng = np.random.default_rng(3)
    for f in (random_coverage(7, 15, rng), ModularFunction(rng.uniform(0.1, 1, 7))):
        rep = empirical_ratios(f)
        assert rep.gamma_hat == pytest.approx(1.0, abs=1e-12)
        assert rep.beta_hat == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10_000))
def test_ratio_relations(n, seed):
    f = random_monotone_table(n, seed)
    rep = empirical_ratios(f)
    assert 0 <= rep.gamma_e_hat <= rep.gamma_hat + 1e-15 <= 1 + 1e-15
    assert rep.beta_hat >= 1 - 1e-12
    assert rep.beta_hat <= n + 1e-9
    if rep.gamma_e_hat > 0:
        assert rep.beta_hat <= 1 / rep.gamma_e_hat + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10_000))
def test_spectral_bounds_sandwich_empirical_ratios(n, seed):
    inst = generate_regression_instance(n, 6 * n, 0.5, seed)
    f = R2Objective(inst)
    for k in range(2, n + 1):
        lo, hi = spectral_bounds(inst, k)
        rep = empirical_ratios(f, max_b=k, elementwise=False)
        assert rep.gamma_hat >= lo - 1e-8
        assert rep.beta_hat <= hi + 1e-8


def test_worst_case_gamma_and_full_pair_beta():
    f = WorstCaseObjective(WorstCaseInstance(3, 0.5))
    assert empirical_ratios(f).gamma_hat == pytest.approx(0.5, abs=1e-12)
    assert pair_ratios(f, [], [0, 1, 2])[1] == pytest.approx(1.875, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(2, 7), st.integers(0, 10_000))
def test_aopt_bound_holds(p, n, seed):
    inst = generate_design_instance(p, n, seed)
    c = aopt_bound(inst)
    rep = empirical_ratios(AOptimalObjective(inst), elementwise=False)
    assert rep.gamma_hat >= 1 / c - 1e-8 and rep.beta_hat <= c + 1e-8


def test_guards():
    with pytest.raises(GroundSetTooLarge):
        empirical_ratios(ModularFunction(np.ones(15)))
    assert empirical_elementwise_gamma(ModularFunction([1.0, 2.0])) == 1.0
    assert linalg.sparse_min_eigenvalue(np.eye(2), 1) == 1.0

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from weaksub.algorithms import (
    _rrg_path,
    FullLSParams,
    best_of_runs_init,
    brute_force_opt,
    curve_crossing,
    distorted_guarantee,
    distorted_local_search_exact,
    distorted_local_search_full,
    guarantee_curve,
    ls_guarantee,
    plain_local_search,
    residual_random_greedy,
    rrg_guarantee,
)
from weaksub.errors import GroundSetTooLarge, InvalidArgument
from weaksub.matroids import PartitionMatroid, UniformMatroid
from weaksub.potential import exact_g
from weaksub.ratios import empirical_ratios
from weaksub.set_functions import (
    ModularFunction,
    R2Objective,
    RegressionInstance,
    WorstCaseInstance,
    WorstCaseObjective,
    random_coverage,
    random_monotone_table,
)


def suppressor():
    r = 1 / math.sqrt(2)
    return R2Objective(RegressionInstance([[1, r], [r, 1]], [0, r]))


def test_brute_force_matches_enumeration_and_breaks_ties_lexicographically():
    f = random_monotone_table(7, 0)
    M = UniformMatroid(7, 3)
    S, v = brute_force_opt(f, M)
    assert v == pytest.approx(max(f(T) for T in combinations(range(7), 3)))
    g = ModularFunction([1.0, 1.0, 1.0, 1.0])
    assert brute_force_opt(g, UniformMatroid(4, 2))[0] == (0, 1)
    assert brute_force_opt(g, UniformMatroid(4, 0)) == ((), 0.0)
    with pytest.raises(GroundSetTooLarge):
        brute_force_opt(ModularFunction(np.ones(17)), UniformMatroid(17, 1))


def test_rrg_on_suppressor_example_finds_optimum():
    f = suppressor()
    M = UniformMatroid(2, 1)
    assert brute_force_opt(f, M) == ((1,), pytest.approx(0.5))
    vals = [residual_random_greedy(f, M, s).value for s in range(100)]
    assert np.mean(vals) >= 0.25


def test_rrg_on_modular_always_returns_top_k():
    w = [5.0, 1.0, 4.0, 3.0, 2.0]
    f = ModularFunction(w)
    for s in range(30):
        assert residual_random_greedy(f, UniformMatroid(5, 3), s).solution == (0, 2, 3)


def test_rrg_is_deterministic_given_seed_and_respects_matroid():
    f = random_coverage(9, 20, 2)
    M = PartitionMatroid([0, 0, 0, 1, 1, 1, 2, 2, 2], [1, 2, 1])
    a = residual_random_greedy(f, M, 7)
    b = residual_random_greedy(random_coverage(9, 20, 2), M, 7)
    assert a.solution == b.solution and a.oracle_calls == b.oracle_calls
    assert M.is_base(a.solution)


def test_best_of_one_run_equals_single_rrg():
    f = random_monotone_table(8, 4)
    M = UniformMatroid(8, 3)
    for s in range(10):
        assert best_of_runs_init(f, M, 1, s) == residual_random_greedy(f, M, s).solution


def test_best_of_runs_charges_full_cost_of_every_run():
    M = UniformMatroid(6, 2)
    f1, f2 = random_coverage(6, 12, 1), random_coverage(6, 12, 1)
    best_of_runs_init(f1, M, 5, 3)
    rng = np.random.default_rng(3)
    U = rng.random((5, 2))
    single = 0
    for row in U:
        g = random_coverage(6, 12, 1)
        _rrg_path(g, M, row)
        single += g.calls + 1
    assert f1.calls == single
    with pytest.raises(InvalidArgument):
        best_of_runs_init(f2, M, 0, 0)


def test_plain_local_search_guarantee_on_random_instances():
    rng = np.random.default_rng(5)
    for _ in range(8):
        f = random_monotone_table(7, rng)
        M = UniformMatroid(7, 3)
        rep = empirical_ratios(f, elementwise=False)
        run = plain_local_search(f, M, 0.01)
        opt = brute_force_opt(f, M)[1]
        assert run.value >= ls_guarantee(rep.gamma_hat, rep.beta_hat, 0.01) * opt - 1e-12
        assert run.improvements <= run.params["improvement_budget"]
    with pytest.raises(InvalidArgument):
        plain_local_search(f, M, 0.0)


def test_exact_distorted_local_search_guarantee_and_local_optimality():
    rng = np.random.default_rng(6)
    for _ in range(8):
        f = random_coverage(8, 16, rng)
        M = UniformMatroid(8, 3)
        run = distorted_local_search_exact(f, M, 1.0, 1.0)
        opt = brute_force_opt(f, M)[1]
        assert run.value >= (1 - math.exp(-1)) * opt - 1e-9
        phi = run.params["phi"]
        gS = exact_g(f, phi, run.solution)
        for b in run.solution:
            for a in range(8):
                if a not in run.solution:
                    T = [x for x in run.solution if x != b] + [a]
                    assert exact_g(f, phi, T) <= gS * (1 + 1e-12) + 1e-12


def test_exact_distorted_search_on_worst_case_instance():
    f = WorstCaseObjective(WorstCaseInstance(4, 0.5))
    run = distorted_local_search_exact(f, UniformMatroid(4, 2), 0.5, 2.0)
    assert len(run.solution) == 2 and run.value == pytest.approx(f.instance.x[2])


def test_full_params_derived_constants():
    p = FullLSParams.derive(0.1, 3, 10)
    H3 = 1 + 1 / 2 + 1 / 3
    h4 = 4 * math.exp(4) / (math.exp(4) - 1)
    delta = 0.1 / (4 * h4 * H3 * 3)
    L = 1 + math.ceil(math.log(3 / 16) / math.log(0.9))
    M = math.log(7 * 128 * math.exp(4 * L * 0.1) * h4 * H3) / math.log(1 + delta)
    assert p.L == L == 17
    assert p.Delta == pytest.approx(0.1 / 3)
    assert p.delta == pytest.approx(delta)
    assert p.M == pytest.approx(M)
    assert p.N == math.ceil(196 / delta**2 * math.log(M * 30))
    assert p.G == math.ceil(2 * math.log(10) * 128**2) == 75452
    guesses = p.phi_guesses()
    assert guesses[0] == 4.0 and guesses[-1] < 0.75 <= guesses[-2]
    assert FullLSParams.derive(1.0, 3, 10).L == 1
    with pytest.raises(InvalidArgument):
        FullLSParams.derive(0.0, 3, 10)


def test_full_distorted_search_is_seeded_and_bounded():
    f = random_coverage(8, 20, 9)
    M = UniformMatroid(8, 2)
    p = FullLSParams.derive(0.2, 2, 8)
    a = distorted_local_search_full(f, M, p, 1, seed=1)
    b = distorted_local_search_full(random_coverage(8, 20, 9), M, p, 1, seed=1)
    assert a.solution == b.solution and a.oracle_calls == b.oracle_calls
    assert a.improvements <= p.M
    assert 1 <= a.phi_guesses_used <= p.L
    assert M.is_base(a.solution)
    opt = brute_force_opt(f, M)[1]
    assert a.value >= (1 - math.exp(-1) - 2.5 * 0.2) * opt


def test_full_search_direct_sampling_path_runs():
    f = random_coverage(6, 12, 2)
    M = UniformMatroid(6, 2)
    p = FullLSParams(0.5, 2, 6, 1 / 128, 0.25, 0.05, 2, 10.0, 500, 3)
    rep = distorted_local_search_full(f, M, p, 0, sampling="direct")
    assert M.is_base(rep.solution) and rep.improvements <= 10


def test_guarantee_curve_endpoint_and_crossing():
    g, old, new, dist = guarantee_curve([1.0])[0]
    assert (old, new) == (0.25, 0.5)
    assert dist == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert curve_crossing() == pytest.approx(0.7217, abs=1e-3)
    with pytest.raises(InvalidArgument):
        guarantee_curve([0.0])


def test_distorted_curve_is_nondecreasing():
    rows = guarantee_curve(np.linspace(0.01, 1, 500))
    d = [r[3] for r in rows]
    assert all(x <= y + 1e-15 for x, y in zip(d, d[1:]))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0))
def test_new_rrg_bound_dominates_old(gamma):
    _, old, new, _ = guarantee_curve([gamma])[0]
    assert new >= old
    assert rrg_guarantee(gamma, 1 / gamma) == pytest.approx(new)
    assert distorted_guarantee(gamma, 1 / gamma) == pytest.approx(guarantee_curve([gamma])[0][3])

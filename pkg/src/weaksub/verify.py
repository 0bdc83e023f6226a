"""Randomized property suites behind ``weaksub verify``.

Each suite returns its worst residual: an identity's largest absolute
error, or an inequality's largest violation (positive means violated).
A suite passes when the residual is within its tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np

from . import linalg
from .algorithms import (
    brute_force_opt,
    curve_crossing,
    distorted_local_search_exact,
    guarantee_curve,
    ls_guarantee,
    plain_local_search,
    residual_random_greedy,
)
from .matroids import PartitionMatroid, UniformMatroid, exchange_bijection, random_base
from .potential import (
    coefficient_table,
    estimate_g_marginal,
    exact_g,
    exact_g_marginal,
    h,
    harmonic,
    phi_and_h,
    phi_of,
)
from .ratios import aopt_bound, empirical_ratios
from .set_functions import (
    AOptimalObjective,
    R2Objective,
    RegressionInstance,
    WorstCaseInstance,
    WorstCaseObjective,
    generate_design_instance,
    generate_regression_instance,
    r2_value,
    random_coverage,
    random_monotone_table,
    residual_instance,
    to_mask,
)

MASTER_SEED = 0x5EED
PHI_GRID = (0.75, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class Suite:
    id: str
    description: str
    tol: float
    run: Callable[[np.random.Generator], float]


def _subset(rng, n, size):
    return sorted(rng.choice(n, size=size, replace=False).tolist())


def _random_oracles(rng, count, n):
    """Mix of coverage, Moebius-table and regression oracles."""
    out = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            out.append(random_coverage(n, 3 * n, rng))
        elif kind == 1:
            out.append(random_monotone_table(n, rng))
        else:
            inst = generate_regression_instance(n, 4 * n, 0.5, rng, mixing=0.4)
            out.append(R2Objective(inst))
    return out


# -- coefficient identities -------------------------------------------------


def potential_marginal_identity(rng, trials=40):
    worst = 0.0
    for f in _random_oracles(rng, trials // 4, 8):
        for _ in range(4):
            phi = float(rng.choice(PHI_GRID))
            A = _subset(rng, f.n, int(rng.integers(0, 6)))
            e = int(rng.choice([x for x in range(f.n) if x not in A]))
            diff = exact_g(f, phi, A + [e]) - exact_g(f, phi, A)
            worst = max(worst, abs(exact_g_marginal(f, phi, e, A) - diff))
    return worst


def coefficient_row_sums(rng, a_max=32):
    worst = 0.0
    for phi in PHI_GRID:
        m = coefficient_table(phi, a_max).m
        for a in range(a_max + 1):
            s = math.fsum(math.comb(a, b) * m[a, b] for b in range(a + 1))
            worst = max(worst, abs(s - 1.0))
    return worst


def pascal_identity(rng, a_max=32):
    worst = 0.0
    for phi in PHI_GRID:
        m = coefficient_table(phi, a_max + 1).m
        for a in range(a_max + 1):
            for b in range(a + 1):
                worst = max(worst, abs(m[a, b] - m[a + 1, b + 1] - m[a + 1, b]))
    return worst


def recurrence_residual(phi, a, b, m):
    """Integration-by-parts identity linking row ``a`` to row ``a − 1``."""
    prev = lambda i, j: m[i, j] if 0 <= j <= i else 0.0  # noqa: E731
    rhs = -b * prev(a - 1, b - 1) + (a - b) * prev(a - 1, b)
    if b == 0:
        rhs -= phi / math.expm1(phi)
    if b == a:
        rhs += phi * math.exp(phi) / math.expm1(phi)
    return phi * m[a, b] - rhs


def recurrence_identity(rng, a_max=32):
    worst = 0.0
    for phi in PHI_GRID:
        m = coefficient_table(phi, a_max).m
        for a in range(1, a_max + 1):
            for b in range(a + 1):
                worst = max(worst, abs(recurrence_residual(phi, a, b, m)))
    return worst


# -- regression structure ---------------------------------------------------


def example_1(rng):
    r = 1 / math.sqrt(2)
    f = R2Objective(RegressionInstance([[1, r], [r, 1]], [0, r]))
    rep = empirical_ratios(f)
    errs = [
        f.marginal(0, []) - 0.0,
        f.marginal(0, [1]) - 0.5,
        rep.gamma_hat - 0.5,
        rep.gamma_e_hat - 0.0,
        linalg.min_eigenvalue(f.instance.C) - (1 - r),
    ]
    return max(abs(x) for x in errs)


def residual_decomposition(rng, trials=30):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(3, 7))
        inst = generate_regression_instance(n, 5 * n, 0.5, rng)
        A = _subset(rng, n, int(rng.integers(1, n)))
        res = residual_instance(inst, A)
        rest = [i for i in range(n) if i not in A]
        rA = r2_value(inst, A)
        for size in range(len(rest) + 1):
            for T in combinations(range(len(rest)), size):
                S = [rest[t] for t in T]
                lhs = r2_value(inst, A + S)
                rhs = rA + (1 - rA) * r2_value(res, T)
                worst = max(worst, abs(lhs - rhs))
    return worst


def residual_lambda_min(rng, trials=50):
    worst = -math.inf
    for _ in range(trials):
        n = int(rng.integers(3, 8))
        inst = generate_regression_instance(n, 5 * n, 0.5, rng)
        A = _subset(rng, n, int(rng.integers(1, n)))
        lam_res = linalg.min_eigenvalue(residual_instance(inst, A).C)
        worst = max(worst, linalg.min_eigenvalue(inst.C) - lam_res)
    return worst


def block_inverse_check(rng, trials=50):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 8))
        G = rng.standard_normal((n, n))
        M = G @ G.T + 0.5 * np.eye(n)
        s = int(rng.integers(1, n))
        blocks = linalg.block_inverse(M[:s, :s], M[:s, s:], M[s:, :s], M[s:, s:])
        worst = max(worst, float(np.max(np.abs(blocks - linalg.invert_pd(M)))))
    return worst


def woodbury_check(rng, trials=50):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        r = int(rng.integers(1, n + 1))
        G = rng.standard_normal((n, n))
        A = G @ G.T + np.eye(n)
        U = rng.standard_normal((n, r))
        H = rng.standard_normal((r, r))
        C = H @ H.T + np.eye(r)
        got = linalg.woodbury_inverse(linalg.invert_pd(A), U, C, U.T)
        worst = max(worst, float(np.max(np.abs(got - linalg.invert_pd(A + U @ C @ U.T)))))
    return worst


# -- ratio bounds -----------------------------------------------------------


def beta_spectral_bound(rng, instances=200, n_max=6):
    worst = -math.inf
    for _ in range(instances):
        n = int(rng.integers(2, n_max + 1))
        inst = generate_regression_instance(n, 6 * n, 0.5, rng)
        f = R2Objective(inst)
        for k in range(2, n + 1):
            beta = empirical_ratios(f, max_b=k, elementwise=False).beta_hat
            worst = max(worst, beta - 1 / linalg.sparse_min_eigenvalue(inst.C, k))
    return worst


def gamma_spectral_bound(rng, instances=100, n_max=6):
    worst = -math.inf
    for _ in range(instances):
        n = int(rng.integers(2, n_max + 1))
        inst = generate_regression_instance(n, 6 * n, 0.5, rng)
        f = R2Objective(inst)
        for k in range(2, n + 1):
            gamma = empirical_ratios(f, max_b=k, elementwise=False).gamma_hat
            worst = max(worst, linalg.sparse_min_eigenvalue(inst.C, k) - gamma)
    return worst


def worst_case_beta(k, gamma):
    return math.prod((l + 1 - gamma) / l for l in range(1, k))


def worst_case_ratios(rng):
    worst = 0.0
    for k in range(3, 9):
        for gamma in (0.1, 0.3, 0.5, 0.9):
            inst = WorstCaseInstance(k, gamma)
            f = WorstCaseObjective(inst)
            rep = empirical_ratios(f, elementwise=False)
            full = k * (inst.x[k] - inst.x[k - 1])  # ratio at (∅, X)
            worst = max(worst, abs(rep.gamma_hat - gamma), abs(full - worst_case_beta(k, gamma)))
            for i in range(k - 1):
                step = inst.x[i + 1] - inst.x[i] - gamma * (1 - inst.x[i]) / (k - i)
                worst = max(worst, abs(step))
    return worst


def aopt_ratios(rng, instances=100):
    worst = -math.inf
    for _ in range(instances):
        p = int(rng.integers(1, 5))
        n = int(rng.integers(2, 9))
        inst = generate_design_instance(p, n, rng)
        c = aopt_bound(inst)
        rep = empirical_ratios(AOptimalObjective(inst), elementwise=False)
        worst = max(worst, 1 / c - rep.gamma_hat, rep.beta_hat - c)
    return worst


def ratio_relations(rng, count=30):
    worst = -math.inf
    for f in _random_oracles(rng, count, 7):
        rep = empirical_ratios(f)
        worst = max(worst, rep.gamma_e_hat - rep.gamma_hat)
        if rep.gamma_e_hat > 0:
            worst = max(worst, rep.beta_hat - 1 / rep.gamma_e_hat)
        worst = max(worst, rep.beta_hat - f.n)
    for _ in range(count // 3):
        rep = empirical_ratios(random_coverage(7, 15, rng))
        worst = max(worst, abs(rep.gamma_hat - 1), abs(rep.beta_hat - 1))
    return worst


# -- potential bounds -------------------------------------------------------


def layer_sum_bound(rng, count=24):
    worst = -math.inf
    for f in _random_oracles(rng, count, 8):
        gamma = empirical_ratios(f, elementwise=False).gamma_hat
        A = _subset(rng, f.n, int(rng.integers(1, 9)))
        fA = f(A)
        for i in range(1, len(A) + 1):
            Fi = sum(f(B) for B in combinations(A, i))
            worst = max(worst, math.comb(len(A) - 1, i - 1) * gamma * fA - Fi)
    return worst


def potential_sandwich(rng, count=24):
    worst = -math.inf
    for f in _random_oracles(rng, count, 9):
        gamma = empirical_ratios(f, elementwise=False).gamma_hat
        A = _subset(rng, f.n, int(rng.integers(1, 10)))
        fA = f(A)
        for phi in PHI_GRID:
            g = exact_g(f, phi, A)
            worst = max(worst, gamma * fA - g, g - h(phi) * harmonic(len(A)) * fA)
    return worst


def phi_sensitivity(rng, count=24):
    worst = -math.inf
    for f in _random_oracles(rng, count, 9):
        A = _subset(rng, f.n, int(rng.integers(1, 10)))
        for phi in (0.75, 1.0, 4.0):
            g = exact_g(f, phi, A)
            for eps in (0.01, 0.1, 0.5):
                lo = exact_g(f, phi * (1 - eps), A)
                worst = max(worst, math.exp(-phi * eps) * g - lo)
                worst = max(worst, h(phi) - math.exp(phi * eps) * h(phi * (1 - eps)))
    return worst


def concentration_failure_rate(f, phi, e, A, N, delta, trials, rng):
    exact = exact_g_marginal(f, phi, e, A)
    scale = f(list(A) + [e])
    fails = 0
    for _ in range(trials):
        est = estimate_g_marginal(f, phi, e, A, N, rng)
        fails += abs(est - exact) >= delta * scale
    return fails / trials


def sampling_concentration(rng, trials=200, N=2000, delta=0.05):
    f = random_coverage(9, 25, rng)
    A = list(range(6))
    rate = concentration_failure_rate(f, 1.0, 8, A, N, delta, trials, rng)
    return rate - (2 * math.exp(-delta**2 * N / 2) + 0.01)


def phi_range(rng):
    worst = -math.inf
    for gamma in np.linspace(0.01, 1.0, 100):
        for beta in np.linspace(1.0, 10.0, 91):
            phi, _, guar = phi_and_h(float(gamma), float(beta))
            worst = max(worst, 0.75 - phi - 1e-12)
            if phi > 4 or gamma < 1 / 7:
                worst = max(worst, guar - (1 + 1 / gamma) ** -2)
    return worst


def h_increasing(rng):
    grid = np.linspace(1e-3, 20, 4000)
    vals = np.array([h(x) for x in grid])
    return float(np.max(vals[:-1] - vals[1:]))


# -- algorithms -------------------------------------------------------------


def exchange_bijections(rng, trials=100):
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(3, 10))
        if rng.random() < 0.5:
            M = UniformMatroid(n, int(rng.integers(1, n + 1)))
        else:
            ncls = int(rng.integers(1, 4))
            classes = rng.integers(0, ncls, size=n)
            M = PartitionMatroid(classes, rng.integers(1, 3, size=ncls))
        A, B = random_base(M, rng), random_base(M, rng)
        pi = exchange_bijection(M, A, B)
        ok = sorted(pi) == sorted(A) and sorted(pi.values()) == sorted(B)
        ok = ok and all(M.is_independent((set(A) - {a}) | {b}) for a, b in pi.items())
        bad += not ok
    return float(bad)


def _small_instances(rng, count, n=8):
    out = []
    for i in range(count):
        if i % 2 == 0:
            f = random_coverage(n, 2 * n, rng)
        else:
            f = R2Objective(generate_regression_instance(n, 6 * n, 0.5, rng, mixing=0.3))
        M = UniformMatroid(n, int(rng.integers(2, 4)))
        out.append((f, M))
    return out


def rrg_expectation(rng, instances=4, runs=400):
    worst = -math.inf
    for f, M in _small_instances(rng, instances):
        rep = empirical_ratios(f, elementwise=False)
        _, opt = brute_force_opt(f, M)
        mean = np.mean([residual_random_greedy(f, M, rng).value for _ in range(runs)])
        bound = rep.gamma_hat / (rep.gamma_hat + rep.beta_hat) * opt
        worst = max(worst, (bound - 0.02 * opt - mean) / max(opt, 1e-12))
    return worst


def base_pair_inequality(rng, instances=6, pairs=20):
    worst = -math.inf
    for f, M in _small_instances(rng, instances, n=7):
        rep = empirical_ratios(f, elementwise=False)
        gamma, beta = rep.gamma_hat, rep.beta_hat
        phi = phi_of(gamma, beta)
        if phi > 100:
            continue
        for _ in range(pairs):
            A, O = random_base(M, rng), random_base(M, rng)
            pi = exchange_bijection(M, A, O)
            gA = exact_g(f, phi, A)
            swaps = sum(exact_g(f, phi, (set(A) - {a}) | {o}) - gA for a, o in pi.items())
            worst = max(worst, gamma**2 * f(O) - (h(phi) * f(A) + swaps))
    return worst


def exact_distorted_guarantee(rng, instances=6):
    worst = -math.inf
    for f, M in _small_instances(rng, instances, n=8):
        rep = empirical_ratios(f, elementwise=False)
        if phi_of(rep.gamma_hat, rep.beta_hat) > 100:
            continue
        run = distorted_local_search_exact(f, M, rep.gamma_hat, max(1.0, rep.beta_hat))
        _, opt = brute_force_opt(f, M)
        worst = max(worst, run.guarantee_used * opt - run.value)
    return worst


def plain_ls_guarantee(rng, instances=6, eps=0.01):
    worst = -math.inf
    for f, M in _small_instances(rng, instances):
        rep = empirical_ratios(f, elementwise=False)
        run = plain_local_search(f, M, eps)
        _, opt = brute_force_opt(f, M)
        worst = max(worst, ls_guarantee(rep.gamma_hat, rep.beta_hat, eps) * opt - run.value)
    return worst


def curve_endpoints(rng):
    _, old, new, dist = guarantee_curve([1.0])[0]
    errs = [old - 0.25, new - 0.5, dist - (1 - math.exp(-1))]
    return max(max(abs(x) for x in errs), abs(curve_crossing() - 0.7217) - 0.001 + 1e-6)


SUITES: dict[str, Suite] = {
    s.id: s
    for s in [
        Suite("lemma-1.1", "potential marginal equals potential difference", 1e-9, potential_marginal_identity),
        Suite("lemma-1.2", "coefficients weighted by binomials sum to one", 1e-10, coefficient_row_sums),
        Suite("lemma-1.3", "Pascal-type coefficient identity", 1e-10, pascal_identity),
        Suite("lemma-1.4", "integration-by-parts coefficient recurrence", 1e-9, recurrence_identity),
        Suite("example-1", "suppressor example values", 1e-10, example_1),
        Suite("lemma-3", "R^2 residual decomposition", 1e-8, residual_decomposition),
        Suite("lemma-e1", "residual covariance keeps lambda_min", 1e-8, residual_lambda_min),
        Suite("lemma-e2", "block matrix inverse", 1e-9, block_inverse_check),
        Suite("lemma-e3", "Sherman-Morrison-Woodbury", 1e-9, woodbury_check),
        Suite("thm-1", "beta <= 1/lambda_min(C, k) for R^2", 1e-8, beta_spectral_bound),
        Suite("das-kempe", "gamma >= lambda_min(C, k) for R^2", 1e-8, gamma_spectral_bound),
        Suite("thm-7", "worst-case construction ratios", 1e-9, worst_case_ratios),
        Suite("thm-8", "A-optimal design is (1/c, c)-weakly submodular", 1e-8, aopt_ratios),
        Suite("ratios", "gamma >= gamma_e, beta <= 1/gamma_e, beta <= n", 1e-12, ratio_relations),
        Suite("lemma-a1", "layer sums F_i lower bound", 1e-9, layer_sum_bound),
        Suite("lemma-a2", "gamma f(A) <= g(A) <= h H f(A)", 1e-9, potential_sandwich),
        Suite("lemma-a3", "sensitivity of g and h to phi", 1e-10, phi_sensitivity),
        Suite("lemma-a4", "sampling estimator concentration", 0.0, sampling_concentration),
        Suite("lemma-b1", "phi >= 3/4 and RRG dominance regime", 0.0, phi_range),
        Suite("h-increasing", "h is increasing", 0.0, h_increasing),
        Suite("prop-1", "exchange bijections are valid", 0.0, exchange_bijections),
        Suite("thm-4", "RRG expected value bound", 0.0, rrg_expectation),
        Suite("thm-5", "base-pair potential inequality", 1e-8, base_pair_inequality),
        Suite("thm-5-ls", "exact distorted local search guarantee", 1e-9, exact_distorted_guarantee),
        Suite("ls", "plain local search guarantee", 1e-9, plain_ls_guarantee),
        Suite("fig-1", "guarantee curve endpoints and crossing", 1e-6, curve_endpoints),
    ]
}


def run_suite(suite_id: str, seed: int = MASTER_SEED) -> tuple[bool, float]:
    suite = SUITES[suite_id]
    rng = np.random.default_rng([seed, sorted(SUITES).index(suite_id)])
    worst = float(suite.run(rng))
    return worst <= suite.tol, worst

"""Maximization algorithms under a matroid constraint.

All randomized routines take a ``numpy.random.Generator`` (or anything
``default_rng`` accepts) and are deterministic given it.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .errors import GroundSetTooLarge, InvalidArgument, NonTermination, SetTooLarge
from .matroids import Matroid, greedy_base, max_weight_base_completion
from .potential import estimate_g_marginal, exact_g, guarantee_from_phi, h, harmonic, phi_of
from .set_functions import SetFunction, to_mask

MAX_BRUTE_N = 16
MAX_EXACT_LS_N = 16
EXACT_LS_CAP = 10**6
# strict-improvement slack for the exact potential; absorbs float noise only
EXACT_LS_RTOL = 1e-12


@dataclass
class RunReport:
    algorithm: str
    seed: int | None
    solution: tuple[int, ...]
    value: float
    oracle_calls: int
    improvements: int = 0
    phi_guesses_used: int = 0
    guarantee_used: float | None = None
    wall_time: float = 0.0
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solution"] = list(self.solution)
        return d


def brute_force_opt(f: SetFunction, M: Matroid) -> tuple[tuple[int, ...], float]:
    """Best base by exhaustive enumeration; lexicographically smallest on ties."""
    if M.n > MAX_BRUTE_N:
        raise GroundSetTooLarge(f"brute force limited to n <= {MAX_BRUTE_N}")
    best, best_val = None, -math.inf
    for S in M.bases():
        v = f(S)
        if v > best_val:
            best, best_val = S, v
    if best is None:
        return (), 0.0
    return tuple(best), best_val


def _rrg_path(f: SetFunction, M: Matroid, u: np.ndarray, cache: dict | None = None) -> tuple[int, ...]:
    """One ResidualRandomGreedy run driven by uniforms ``u`` (one per step).

    ``cache`` maps a partial solution to its greedy completion and the
    number of queries that completion costs, so repeated runs skip the
    recomputation but are still charged for it.
    """
    S: list[int] = []
    for i in range(M.rank):
        key = to_mask(S)
        hit = cache.get(key) if cache is not None else None
        if hit is None:
            before = f.calls
            base = f.value_mask(key)
            w = np.zeros(M.n)
            for e in range(M.n):
                if not key >> e & 1:
                    w[e] = f.value_mask(key | (1 << e)) - base
            T = max_weight_base_completion(M, S, w)
            if cache is not None:
                cache[key] = (T, f.calls - before)
        else:
            T, cost = hit
            f.charge(cost)
        S.append(T[min(int(u[i] * len(T)), len(T) - 1)])
    return tuple(sorted(S))


def residual_random_greedy(f: SetFunction, M: Matroid, rng, seed: int | None = None) -> RunReport:
    """Extend to a best base by marginals, then commit one uniformly random element of it; repeat."""
    rng = np.random.default_rng(rng)
    start, calls0 = time.perf_counter(), f.calls
    u = rng.random(M.rank)
    S = _rrg_path(f, M, u)
    return RunReport(
        algorithm="rrg",
        seed=seed,
        solution=S,
        value=f(S),
        oracle_calls=f.calls - calls0,
        wall_time=time.perf_counter() - start,
    )


def best_of_runs_init(f: SetFunction, M: Matroid, G: int, rng) -> tuple[int, ...]:
    """Best (by ``f``) of ``G`` independent ResidualRandomGreedy runs; first run wins ties."""
    if G < 1:
        raise InvalidArgument("G must be at least 1")
    rng = np.random.default_rng(rng)
    U = rng.random((int(G), M.rank))
    cache: dict = {}
    best, best_val = None, -math.inf
    seen: dict[tuple, float] = {}
    for row in U:
        S = _rrg_path(f, M, row, cache)
        v = seen.get(S)
        if v is None:
            v = seen[S] = f.lookup(to_mask(S))
        f.charge()
        if v > best_val:
            best, best_val = S, v
    return best


def _first_improving_swap(f, M, S, accept):
    """Scan ``b ∈ S`` then ``a ∉ S`` ascending; return the first feasible swap ``accept`` likes."""
    members = set(S)
    for b in sorted(S):
        rest = [x for x in S if x != b]
        for a in range(M.n):
            if a in members or not M.can_add(rest, a):
                continue
            if accept(rest, b, a):
                return b, a
    return None


def plain_local_search(f: SetFunction, M: Matroid, epsilon: float, seed: int | None = None) -> RunReport:
    """Oblivious swap search accepting only ``(1 + ε/k)``-factor improvements."""
    if epsilon <= 0:
        raise InvalidArgument("epsilon must be positive")
    start, calls0 = time.perf_counter(), f.calls
    k = M.rank
    if k == 0:
        return RunReport("ls", seed, (), 0.0, f.calls - calls0, params={"epsilon": epsilon})
    singles = [e for e in range(M.n) if M.is_independent([e])]
    vals = [f([e]) for e in singles]
    e_max = singles[int(np.argmax(vals))]
    S = list(greedy_base(M, [e_max]))
    budget = math.ceil(math.log(k) / math.log1p(epsilon / k)) if k > 1 else 0
    factor = 1.0 + epsilon / k
    improvements = 0
    for _ in range(budget):
        threshold = factor * f(S)
        swap = _first_improving_swap(f, M, S, lambda rest, b, a: f(rest + [a]) > threshold)
        if swap is None:
            break
        b, a = swap
        S = [x for x in S if x != b] + [a]
        improvements += 1
    S = tuple(sorted(S))
    return RunReport(
        algorithm="ls",
        seed=seed,
        solution=S,
        value=f(S),
        oracle_calls=f.calls - calls0,
        improvements=improvements,
        wall_time=time.perf_counter() - start,
        params={"epsilon": epsilon, "improvement_budget": budget},
    )


def distorted_local_search_exact(
    f: SetFunction, M: Matroid, gamma: float, beta: float, seed: int | None = None
) -> RunReport:
    """Strict-improvement local search on the exact potential with ``φ = γ² + β(1 − γ)``."""
    if M.n > MAX_EXACT_LS_N:
        raise SetTooLarge(f"exact distorted local search limited to n <= {MAX_EXACT_LS_N}")
    if not 0 < gamma <= 1 or beta < 1:
        raise InvalidArgument("need gamma in (0, 1] and beta >= 1")
    start, calls0 = time.perf_counter(), f.calls
    phi = phi_of(gamma, beta)
    S = list(greedy_base(M))
    g_cur = exact_g(f, phi, S)
    improvements = 0
    while True:
        thresh = g_cur + EXACT_LS_RTOL * max(1.0, abs(g_cur))
        found = {}

        def accept(rest, b, a):
            val = exact_g(f, phi, rest + [a])
            if val > thresh:
                found["g"] = val
                return True
            return False

        swap = _first_improving_swap(f, M, S, accept)
        if swap is None:
            break
        b, a = swap
        S = [x for x in S if x != b] + [a]
        g_cur = found["g"]
        improvements += 1
        if improvements >= EXACT_LS_CAP:
            raise NonTermination(f"no local optimum after {EXACT_LS_CAP} improvements")
    S = tuple(sorted(S))
    return RunReport(
        algorithm="dls-exact",
        seed=seed,
        solution=S,
        value=f(S),
        oracle_calls=f.calls - calls0,
        improvements=improvements,
        phi_guesses_used=1,
        guarantee_used=guarantee_from_phi(gamma, phi),
        wall_time=time.perf_counter() - start,
        params={"gamma": gamma, "beta": beta, "phi": phi},
    )


@dataclass(frozen=True)
class FullLSParams:
    """Parameters of the sampled distorted local search, derived from ``ε``, ``k`` and ``n``."""

    epsilon: float
    k: int
    n: int
    eps_prime: float
    Delta: float
    delta: float
    L: int
    M: float
    N: int
    G: int

    @classmethod
    def derive(cls, epsilon: float, k: int, n: int) -> "FullLSParams":
        if not 0 < epsilon <= 1:
            raise InvalidArgument("epsilon must lie in (0, 1]")
        if k < 1 or n < 2:
            raise InvalidArgument("need k >= 1 and n >= 2")
        Hk = harmonic(k)
        h4 = h(4.0)
        eps_prime = min(epsilon, 1.0 / 128)
        Delta = epsilon / k
        delta = epsilon / (4.0 * h4 * Hk * k)
        if epsilon < 1:
            L = 1 + math.ceil(math.log(3.0 / 16.0) / math.log1p(-epsilon))
        else:
            L = 1  # (1 - ε)^j vanishes for j >= 1
        M = math.log(7 * 128 * math.exp(4 * L * epsilon) * h4 * Hk) / math.log1p(delta)
        N = math.ceil(196.0 / delta**2 * math.log(M * k * n))
        G = math.ceil(2.0 * math.log(n) / eps_prime**2)
        return cls(epsilon, k, n, eps_prime, Delta, delta, L, M, N, G)

    def phi_guesses(self) -> list[float]:
        return [4.0 * (1.0 - self.epsilon) ** j for j in range(self.L)]

    def to_dict(self) -> dict:
        return asdict(self)


def distorted_local_search_full(
    f: SetFunction,
    M: Matroid,
    params: FullLSParams | float,
    rng,
    seed: int | None = None,
    sampling: str = "auto",
) -> RunReport:
    """Sampled distorted local search over a decreasing sequence of ``φ`` guesses.

    Starts from the best of ``G`` ResidualRandomGreedy runs; each guess
    warm-starts from the previous local optimum.  A swap ``b → a`` is
    taken when ``g̃(a | S−b) > g̃(b | S−b) + Δ f(S)``; at most ``M``
    swaps are made over all guesses.  Returns the best set by ``f`` among
    the initial solution and every per-guess local optimum.
    """
    rng = np.random.default_rng(rng)
    if not isinstance(params, FullLSParams):
        params = FullLSParams.derive(float(params), M.rank, M.n)
    start, calls0 = time.perf_counter(), f.calls
    k = M.rank
    if k == 0:
        return RunReport("dls-full", seed, (), 0.0, 0, params=params.to_dict())
    S = list(best_of_runs_init(f, M, params.G, rng))
    best, best_val = tuple(sorted(S)), f(S)
    budget = params.M
    improvements = 0
    guesses = 0
    N = params.N

    def est(e, base):
        return estimate_g_marginal(f, phi, e, base, N, rng, method=sampling)

    for phi in params.phi_guesses():
        if improvements >= budget:
            break
        guesses += 1
        while True:
            threshold_gap = params.Delta * f(S)
            cache_b: dict[int, float] = {}

            def accept(rest, b, a):
                if b not in cache_b:
                    cache_b[b] = est(b, rest)
                return est(a, rest) > cache_b[b] + threshold_gap

            swap = _first_improving_swap(f, M, S, accept)
            if swap is None:
                break
            b, a = swap
            S = [x for x in S if x != b] + [a]
            improvements += 1
            if improvements >= budget:
                break
        v = f(S)
        if v > best_val:
            best, best_val = tuple(sorted(S)), v
    return RunReport(
        algorithm="dls-full",
        seed=seed,
        solution=best,
        value=f(best),
        oracle_calls=f.calls - calls0,
        improvements=improvements,
        phi_guesses_used=guesses,
        wall_time=time.perf_counter() - start,
        params=params.to_dict(),
    )


def guarantee_curve(gamma_grid) -> list[tuple[float, float, float, float]]:
    """Rows ``(γ, old RRG, new RRG, distorted)`` for ``(γ, 1/γ)``-weakly submodular objectives."""
    rows = []
    for g in gamma_grid:
        g = float(g)
        if not 0 < g <= 1:
            raise InvalidArgument(f"gamma={g} outside (0, 1]")
        rrg_old = g * g / (1 + g) ** 2
        rrg_new = g * g / (g * g + 1)
        phi = g * g + 1 / g - 1
        rows.append((g, rrg_old, rrg_new, guarantee_from_phi(g, phi)))
    return rows


def curve_crossing(lo: float = 0.5, hi: float = 0.9, tol: float = 1e-12) -> float:
    """Bisection for the ``γ`` where the distorted guarantee overtakes the new RRG one."""

    def diff(g):
        _, _, new, dist = guarantee_curve([g])[0]
        return dist - new

    if diff(lo) * diff(hi) > 0:
        raise InvalidArgument("crossing not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if diff(lo) * diff(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def rrg_guarantee(gamma: float, beta: float) -> float:
    return gamma / (gamma + beta)


def ls_guarantee(gamma: float, beta: float, epsilon: float) -> float:
    return gamma * gamma / ((2 - gamma) * beta + gamma * gamma + epsilon)


def distorted_guarantee(gamma: float, beta: float) -> float:
    return guarantee_from_phi(gamma, phi_of(gamma, beta))

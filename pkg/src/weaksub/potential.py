"""The distorted potential used by the non-oblivious local search.

For ``φ > 0`` let ``D_φ`` be the density ``φ e^{φp} / (e^φ − 1)`` on [0, 1]
and ``m[a][b] = E_{p~D_φ}[p^b (1−p)^{a−b}]``.  The potential of a set is

    g(A) = Σ_{B ⊆ A} m[|A|−1][|B|−1] f(B)

with ``m`` taken as 0 at negative indices, and its marginals are

    g(e | A) = Σ_{B ⊆ A} m[|A|][|B|] f(e | B).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import ElementInSet, InvalidArgument, InvalidPhi, SetTooLarge
from .set_functions import SetFunction, to_mask

PHI_MIN, PHI_MAX = 1e-3, 100.0
MAX_A = 64
QUAD_NODES = 160
MAX_EXACT_SET = 25
MULTINOMIAL_MAX_BITS = 16


def density(phi: float, p):
    p = np.asarray(p, dtype=float)
    return phi * np.exp(phi * (p - 1.0)) / -np.expm1(-phi)


def h(phi: float) -> float:
    """``φ e^φ / (e^φ − 1)``; increasing, with ``h(0+) = 1``."""
    if phi == 0:
        return 1.0
    return phi / -math.expm1(-phi)


def harmonic(k: int) -> float:
    return math.fsum(1.0 / i for i in range(1, k + 1))


@dataclass(frozen=True)
class CoefficientTable:
    phi: float
    a_max: int
    m: np.ndarray  # m[a, b] for 0 <= b <= a <= a_max, zero above the diagonal

    def coef(self, a: int, b: int) -> float:
        if a < 0 or b < 0 or b > a:
            return 0.0
        return float(self.m[a, b])


@lru_cache(maxsize=256)
def _table_cached(phi_key: float, a_max: int) -> CoefficientTable:
    x, w = np.polynomial.legendre.leggauss(QUAD_NODES)
    p = 0.5 * (x + 1.0)
    wd = 0.5 * w * density(phi_key, p)
    q = 1.0 - p
    m = np.zeros((a_max + 1, a_max + 1))
    # pb[b] = p^b, qb[c] = (1-p)^c at the nodes
    pb = np.ones((a_max + 1, p.size))
    qb = np.ones((a_max + 1, p.size))
    for j in range(1, a_max + 1):
        pb[j] = pb[j - 1] * p
        qb[j] = qb[j - 1] * q
    for a in range(a_max + 1):
        m[a, : a + 1] = (pb[: a + 1] * qb[a::-1]) @ wd
    m.setflags(write=False)
    return CoefficientTable(phi=phi_key, a_max=a_max, m=m)


def coefficient_table(phi: float, a_max: int) -> CoefficientTable:
    """Gauss-Legendre evaluation of every ``m[a][b]`` with ``a <= a_max``."""
    if not PHI_MIN <= phi <= PHI_MAX:
        raise InvalidPhi(f"phi={phi} outside [{PHI_MIN}, {PHI_MAX}]")
    if not 0 <= a_max <= MAX_A:
        raise InvalidArgument(f"a_max must lie in [0, {MAX_A}]")
    return _table_cached(round(float(phi), 12), int(a_max))


def _subset_sums(f: SetFunction, elements, fn) -> np.ndarray:
    """``out[j] = Σ_{B ⊆ elements, |B| = j} fn(mask(B))``."""
    out = np.zeros(len(elements) + 1)
    for j in range(len(elements) + 1):
        total = 0.0
        for B in combinations(elements, j):
            mask = 0
            for e in B:
                mask |= 1 << e
            total += fn(mask)
        out[j] = total
    return out


def exact_g(f: SetFunction, phi: float, A) -> float:
    """Potential value by full subset enumeration (``2**|A|`` queries)."""
    A = sorted(set(int(e) for e in A))
    a = len(A)
    if a > MAX_EXACT_SET:
        raise SetTooLarge(f"exact potential limited to |A| <= {MAX_EXACT_SET}")
    if a == 0:
        return 0.0
    table = coefficient_table(phi, a - 1)
    F = _subset_sums(f, A, f.value_mask)
    return float(table.m[a - 1, : a] @ F[1:])


def exact_g_marginal(f: SetFunction, phi: float, e: int, A) -> float:
    """``g(e | A)`` from the marginal formula."""
    A = sorted(set(int(x) for x in A))
    if e in A:
        raise ElementInSet(f"element {e} already in A")
    a = len(A)
    if a > MAX_EXACT_SET:
        raise SetTooLarge(f"exact potential limited to |A| <= {MAX_EXACT_SET}")
    table = coefficient_table(phi, a)
    bit = 1 << e
    G = _subset_sums(f, A, lambda m: f.value_mask(m | bit) - f.value_mask(m))
    return float(table.m[a, : a + 1] @ G)


def sample_p(phi: float, u):
    """Inverse CDF of ``D_φ``: ``ln(1 + u (e^φ − 1)) / φ``."""
    u = np.asarray(u, dtype=float)
    out = np.log1p(u * np.expm1(phi)) / phi
    return float(out) if out.ndim == 0 else out


def _direct_counts(phi, a, N, rng, chunk=1 << 18):
    """Sample N subsets of an a-set the literal way and tally them by bitmask."""
    weights = (1 << np.arange(a, dtype=np.int64)) if a else np.zeros(0, dtype=np.int64)
    tally: dict[int, int] = {}
    left = N
    while left > 0:
        c = min(chunk, left)
        p = sample_p(phi, rng.random(c))
        if a:
            codes = (rng.random((c, a)) < p[:, None]) @ weights
        else:
            codes = np.zeros(c, dtype=np.int64)
        vals, cnt = np.unique(codes, return_counts=True)
        for v, k in zip(vals.tolist(), cnt.tolist()):
            tally[v] = tally.get(v, 0) + k
        left -= c
    return tally


def _multinomial_counts(phi, a, N, rng):
    """Same distribution as :func:`_direct_counts`, drawn as one multinomial over all subsets."""
    table = coefficient_table(phi, a)
    codes = np.arange(1 << a)
    sizes = np.array([bin(c).count("1") for c in codes.tolist()])
    probs = table.m[a, sizes]
    probs = probs / probs.sum()
    counts = rng.multinomial(N, probs)
    nz = np.flatnonzero(counts)
    return dict(zip(codes[nz].tolist(), counts[nz].tolist()))


def estimate_g_marginal(
    f: SetFunction, phi: float, e: int, A, N: int, rng, method: str = "direct"
) -> float:
    """Unbiased estimate of ``g(e | A)`` from ``N`` random subsets of ``A``.

    Each sample draws ``p ~ D_φ`` and keeps every element of ``A``
    independently with probability ``p``; the estimate is the average of
    ``f(e | B)``.  ``method="multinomial"`` draws the subset counts in one
    multinomial step, which has the same distribution and makes very large
    ``N`` affordable; ``"auto"`` picks it when ``2**|A| <= N``.  The oracle
    is charged ``N`` queries in every case.
    """
    A = sorted(set(int(x) for x in A))
    if e in A:
        raise ElementInSet(f"element {e} already in A")
    if N < 1:
        raise InvalidArgument("N must be at least 1")
    rng = np.random.default_rng(rng)
    a = len(A)
    if method == "auto":
        method = "multinomial" if a <= MULTINOMIAL_MAX_BITS and (1 << a) <= N else "direct"
    if method == "direct":
        tally = _direct_counts(phi, a, int(N), rng)
    elif method == "multinomial":
        if a > MULTINOMIAL_MAX_BITS:
            raise SetTooLarge(f"multinomial sampling limited to |A| <= {MULTINOMIAL_MAX_BITS}")
        tally = _multinomial_counts(phi, a, int(N), rng)
    else:
        raise InvalidArgument(f"unknown sampling method {method!r}")
    bit = 1 << e
    total = 0.0
    for code, cnt in tally.items():
        mask = 0
        for j in range(a):
            if code >> j & 1:
                mask |= 1 << A[j]
        total += cnt * (f.lookup(mask | bit) - f.lookup(mask))
    f.charge(int(N))
    return total / N


def phi_of(gamma: float, beta: float) -> float:
    """``γ² + β(1 − γ)``; exactly 1 when ``γ = 1`` whatever ``β``."""
    if gamma >= 1.0:
        return 1.0
    return gamma * gamma + beta * (1.0 - gamma)


def guarantee_from_phi(gamma: float, phi: float) -> float:
    if math.isinf(phi):
        return 0.0
    if phi <= 0:
        return gamma * gamma
    return gamma * gamma * -math.expm1(-phi) / phi


def phi_and_h(gamma: float, beta: float) -> tuple[float, float, float]:
    """Distortion parameter, ``h(φ)`` and the local-optimum guarantee ``γ²(1 − e^{−φ})/φ``."""
    if not 0.0 < gamma <= 1.0:
        raise InvalidArgument("gamma must lie in (0, 1]")
    if beta < 1.0:
        raise InvalidArgument("beta must be at least 1")
    phi = phi_of(gamma, beta)
    hp = math.inf if math.isinf(phi) else h(phi)
    return phi, hp, guarantee_from_phi(gamma, phi)

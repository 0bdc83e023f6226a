"""Brute-force and spectral estimates of the lower and upper submodularity ratios.

The brute-force routines tabulate ``f`` on all ``2**n`` subsets once and
then sweep every pair ``A ⊆ B`` as numpy arrays.  Pairs are enumerated by
writing each pair as a base-3 number (digit 0: outside ``B``, 1: in
``B \\ A``, 2: in ``A``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import linalg
from .errors import GroundSetTooLarge, NotPositiveDefinite
from .set_functions import DesignInstance, RegressionInstance, SetFunction, mask_to_indices

MAX_RATIO_N = 14
ZERO_GAP = 1e-12


@lru_cache(maxsize=16)
def _pairs(n: int):
    """All pairs ``A ⊆ B`` of bitmasks over ``n`` elements, plus ``|B|``."""
    dtype = np.int64 if n > 18 else np.int32
    t = np.arange(3**n, dtype=dtype)
    A = np.zeros_like(t)
    B = np.zeros_like(t)
    size_b = np.zeros(t.shape, dtype=np.int8)
    for i in range(n):
        d = t % 3
        t = t // 3
        A |= (d == 2).astype(dtype) << i
        inb = d >= 1
        B |= inb.astype(dtype) << i
        size_b += inb
    for arr in (A, B, size_b):
        arr.setflags(write=False)
    return A, B, size_b


@dataclass(frozen=True)
class RatioReport:
    gamma_hat: float
    beta_hat: float
    gamma_e_hat: float | None
    gamma_witness: tuple | None
    beta_witness: tuple | None
    pair_count: int
    max_b: int

    def to_dict(self) -> dict:
        def fmt(x):
            if x is None:
                return None
            return "inf" if math.isinf(x) else x

        def wit(w):
            return None if w is None else [list(w[0]), list(w[1])]

        return {
            "gamma_hat": fmt(self.gamma_hat),
            "beta_hat": fmt(self.beta_hat),
            "gamma_e_hat": fmt(self.gamma_e_hat),
            "gamma_witness": wit(self.gamma_witness),
            "beta_witness": wit(self.beta_witness),
            "pair_count": self.pair_count,
            "max_b": self.max_b,
        }


def pair_ratios(f: SetFunction, A, B) -> tuple[float, float]:
    """Lower and upper ratio of a single pair, recomputed from ``f`` directly."""
    A, B = set(A), set(B)
    diff = sorted(B - A)
    den = f(B) - f(A)
    low = sum(f.marginal(e, A) for e in diff)
    up = sum(f(B) - f(B - {e}) for e in diff)
    return low / den, up / den


def _check_n(f: SetFunction, n):
    n = f.n if n is None else int(n)
    if n != f.n:
        raise ValueError(f"n={n} does not match oracle ground set size {f.n}")
    if n > MAX_RATIO_N:
        raise GroundSetTooLarge(f"brute-force ratios need n <= {MAX_RATIO_N}, got {n}")
    return n


def _argbest(values: np.ndarray, best: float, A: np.ndarray, B: np.ndarray, n: int) -> int:
    ties = np.flatnonzero(values == best)
    keys = A[ties].astype(np.int64) * (1 << n) + B[ties].astype(np.int64)
    return int(ties[np.argmin(keys)])


def empirical_ratios(
    f: SetFunction, n: int | None = None, max_b: int | None = None, elementwise: bool = True
) -> RatioReport:
    """Exact ``γ̂`` and ``β̂`` over all pairs ``A ⊂ B`` with ``|B| <= max_b``.

    A pair whose gain ``f(B) − f(A)`` is at most 1e-12 constrains nothing
    for ``γ̂`` (the lower inequality holds for every ``γ``); for ``β̂`` it
    forces ``+inf`` when its upper numerator is positive.  Ties between
    witnesses go to the smallest ``(A, B)`` bitmask pair.
    """
    n = _check_n(f, n)
    max_b = n if max_b is None else min(int(max_b), n)
    fv = f.table()
    A_all, B_all, size_b = _pairs(n)
    keep = (A_all != B_all) & (size_b <= max_b)
    A = A_all[keep]
    B = B_all[keep]
    diff = B & ~A
    low = np.zeros(A.shape)
    up = np.zeros(A.shape)
    fA = fv[A]
    fB = fv[B]
    for i in range(n):
        bit = 1 << i
        has = (diff & bit) != 0
        low[has] += fv[A[has] | bit] - fA[has]
        up[has] += fB[has] - fv[B[has] ^ bit]
    den = fB - fA
    valid = den > ZERO_GAP

    gamma_hat, beta_hat = 1.0, 1.0
    gamma_witness = beta_witness = None
    if np.any(valid):
        Av, Bv = A[valid], B[valid]
        g = low[valid] / den[valid]
        b = up[valid] / den[valid]
        gmin = float(g.min())
        j = _argbest(g, gmin, Av, Bv, n)
        gamma_witness = (mask_to_indices(int(Av[j])), mask_to_indices(int(Bv[j])))
        gamma_hat = min(1.0, max(0.0, gmin))
        bmax = float(b.max())
        j = _argbest(b, bmax, Av, Bv, n)
        beta_witness = (mask_to_indices(int(Av[j])), mask_to_indices(int(Bv[j])))
        beta_hat = bmax
    blowup = (~valid) & (up > ZERO_GAP)
    if np.any(blowup):
        idx = np.flatnonzero(blowup)
        keys = A[idx].astype(np.int64) * (1 << n) + B[idx].astype(np.int64)
        j = int(idx[np.argmin(keys)])
        beta_hat = math.inf
        beta_witness = (mask_to_indices(int(A[j])), mask_to_indices(int(B[j])))

    gamma_e = _elementwise_from_table(fv, n) if elementwise else None
    return RatioReport(
        gamma_hat=gamma_hat,
        beta_hat=beta_hat,
        gamma_e_hat=gamma_e,
        gamma_witness=gamma_witness,
        beta_witness=beta_witness,
        pair_count=int(A.size),
        max_b=max_b,
    )


def _elementwise_from_table(fv: np.ndarray, n: int) -> float:
    A, B, _ = _pairs(n)
    best = 1.0
    for e in range(n):
        bit = 1 << e
        out = (B & bit) == 0
        Ae, Be = A[out], B[out]
        num = fv[Ae | bit] - fv[Ae]
        den = fv[Be | bit] - fv[Be]
        ok = den > ZERO_GAP
        if np.any(ok):
            best = min(best, float(np.min(num[ok] / den[ok])))
    return min(1.0, max(0.0, best))


def empirical_elementwise_gamma(f: SetFunction, n: int | None = None) -> float:
    """``min f(e|A) / f(e|B)`` over ``A ⊆ B``, ``e ∉ B`` with ``f(e|B) > 1e-12``, clamped to [0, 1]."""
    n = _check_n(f, n)
    return _elementwise_from_table(f.table(), n)


def spectral_bounds(inst: RegressionInstance, k: int) -> tuple[float, float]:
    """``(λ_min(C, k), 1/λ_min(C, k))``: lower bound on γ and upper bound on β for R²."""
    lam = linalg.sparse_min_eigenvalue(inst.C, k)
    if lam <= linalg.TAU_PD:
        raise NotPositiveDefinite(f"{k}-sparse minimum eigenvalue {lam:.3e} is not positive")
    return lam, 1.0 / lam


def aopt_bound(inst: DesignInstance) -> float:
    """``c = 1 + max_i ||x_i||² λ_max(Λ) / σ²``; the A-optimal objective is ``(1/c, c)``-weakly submodular."""
    if inst.n == 0:
        return 1.0
    s2 = float(np.max(np.sum(inst.X**2, axis=0)))
    return 1.0 + s2 / inst.sigma2 * linalg.max_eigenvalue(inst.Lambda)

"""Set-function oracles and the instances that define them.

Subsets of the ground set ``{0, ..., n-1}`` are passed around either as
iterables of element indices or, on hot paths, as integer bitmasks (bit
``i`` set means element ``i`` is present).
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import (
    DegenerateResidual,
    DegenerateSample,
    InstanceValidationError,
    InvalidArgument,
)

PSD_TOL = 1e-9
DIAG_TOL = 1e-9


def to_mask(S: Iterable[int], n: int | None = None) -> int:
    mask = 0
    for e in S:
        e = int(e)
        if e < 0 or (n is not None and e >= n):
            raise InvalidArgument(f"element {e} outside ground set of size {n}")
        mask |= 1 << e
    return mask


def mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


class SetFunction:
    """Normalized set function with memoized evaluation and a query counter.

    Every query through :meth:`value`, :meth:`value_mask` or ``__call__``
    increments :attr:`calls`, whether or not the memo already holds the
    answer.  :attr:`evaluations` counts distinct sets actually computed.
    Subclasses implement :meth:`_evaluate` on a sorted index tuple.
    """

    kind = "abstract"

    def __init__(self, n: int):
        if n < 0:
            raise InvalidArgument("ground set size must be nonnegative")
        self.n = int(n)
        self._memo: dict[int, float] = {0: 0.0}
        self._calls = 0
        self._lock = threading.Lock()

    def _evaluate(self, S: tuple[int, ...]) -> float:
        raise NotImplementedError

    @property
    def calls(self) -> int:
        return self._calls

    @property
    def evaluations(self) -> int:
        return len(self._memo) - 1

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0

    def charge(self, count: int = 1) -> None:
        """Add ``count`` queries to the counter without evaluating anything."""
        with self._lock:
            self._calls += int(count)

    def lookup(self, mask: int) -> float:
        """Memoized value of the set encoded by ``mask``; not counted."""
        v = self._memo.get(mask)
        if v is None:
            v = float(self._evaluate(mask_to_indices(mask)))
            self._memo[mask] = v
        return v

    def value_mask(self, mask: int) -> float:
        self.charge()
        return self.lookup(mask)

    def value(self, S: Iterable[int]) -> float:
        return self.value_mask(to_mask(S, self.n))

    __call__ = value

    def marginal(self, e: int, S: Iterable[int]) -> float:
        """``f(e | S) = f(S + e) - f(S)``; two queries."""
        mask = to_mask(S, self.n)
        return self.value_mask(mask | (1 << e)) - self.value_mask(mask)

    def table(self) -> np.ndarray:
        """Values on all ``2**n`` subsets indexed by bitmask (charges ``2**n`` queries)."""
        if self.n > 24:
            raise InvalidArgument("full value table limited to n <= 24")
        size = 1 << self.n
        self.charge(size)
        return np.array([self.lookup(m) for m in range(size)])

    def describe(self) -> dict:
        return {"type": self.kind, "n": self.n}


# ---------------------------------------------------------------------------
# Regression (squared multiple correlation)


@dataclass(frozen=True)
class RegressionInstance:
    """Unit-variance predictors with covariance ``C`` and target covariances ``b``."""

    C: np.ndarray
    b: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        try:
            C = linalg.as_symmetric(self.C)
        except InvalidArgument as exc:
            raise InstanceValidationError(f"regression C: {exc}") from None
        b = np.asarray(self.b, dtype=float).ravel()
        if b.shape[0] != C.shape[0]:
            raise InstanceValidationError(
                f"regression b has length {b.shape[0]}, expected {C.shape[0]}"
            )
        if np.max(np.abs(np.diag(C) - 1.0)) > DIAG_TOL:
            raise InstanceValidationError("regression C must have unit diagonal (normalized predictors)")
        aug = np.block([[np.ones((1, 1)), b[None, :]], [b[:, None], C]])
        lam = np.linalg.eigvalsh(aug)[0]
        if lam < -PSD_TOL:
            raise InstanceValidationError(
                f"augmented covariance [[1, b^T], [b, C]] is not PSD (smallest eigenvalue {lam:.3e})"
            )
        C.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n", C.shape[0])


def _index_array(S, n: int) -> np.ndarray:
    idx = np.array(sorted({int(e) for e in S}), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InvalidArgument(f"index set {idx.tolist()} outside ground set of size {n}")
    return idx


def r2_value(inst: RegressionInstance, S: Iterable[int]) -> float:
    """``b_Sᵀ C_S⁻¹ b_S``, the fraction of target variance explained by ``S``."""
    idx = _index_array(S, inst.n)
    if idx.size == 0:
        return 0.0
    return linalg.quad_form_inverse(inst.C[np.ix_(idx, idx)], inst.b[idx])


def residual_instance(inst: RegressionInstance, A: Iterable[int]) -> RegressionInstance:
    """Condition on ``A`` and renormalize what is left.

    The returned instance is over the variables not in ``A``, in increasing
    index order.  Each predictor residual and the target residual are
    rescaled to unit variance.
    """
    idx_A = _index_array(A, inst.n)
    if idx_A.size == 0:
        return inst
    rest = np.setdiff1d(np.arange(inst.n), idx_A)
    C_AA = inst.C[np.ix_(idx_A, idx_A)]
    C_RA = inst.C[np.ix_(rest, idx_A)]
    proj = linalg.cholesky_solve(C_AA, C_RA.T)  # C_A^{-1} C_AR
    cov = inst.C[np.ix_(rest, rest)] - C_RA @ proj
    var = np.diag(cov).copy()
    if rest.size and np.min(var) <= linalg.TAU_PD:
        bad = int(rest[np.argmin(var)])
        raise DegenerateResidual(f"variable {bad} is fully explained by the conditioning set")
    b_A = inst.b[idx_A]
    var_z = 1.0 - float(b_A @ linalg.cholesky_solve(C_AA, b_A))
    if var_z <= linalg.TAU_PD:
        raise DegenerateResidual("target is fully explained by the conditioning set")
    cov_zr = inst.b[rest] - proj.T @ b_A
    sd = np.sqrt(var)
    C_hat = cov / np.outer(sd, sd)
    np.fill_diagonal(C_hat, 1.0)
    b_hat = cov_zr / (sd * np.sqrt(var_z))
    return RegressionInstance(C_hat, b_hat)


class R2Objective(SetFunction):
    kind = "regression"

    def __init__(self, inst: RegressionInstance):
        super().__init__(inst.n)
        self.instance = inst

    def _evaluate(self, S):
        idx = np.asarray(S, dtype=int)
        C = self.instance.C
        return linalg.quad_form_inverse(C[np.ix_(idx, idx)], self.instance.b[idx])


def generate_regression_instance(
    n: int, m: int, noise: float, seed, mixing: float = 1.0, max_retries: int = 10
) -> RegressionInstance:
    """Empirical covariances of a random linear model.

    ``m`` samples of ``n`` latent Gaussians are mixed by ``I + mixing·G``
    (``G`` standard normal), the target is a sparse random combination of
    the predictors plus Gaussian noise of standard deviation ``noise``,
    and every column is standardized before forming ``(C, b)``.
    """
    if n < 1:
        raise InvalidArgument("n must be positive")
    if m < n + 1:
        raise InvalidArgument("need m >= n + 1 samples")
    if noise < 0:
        raise InvalidArgument("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        latent = rng.standard_normal((m, n))
        mix = np.eye(n) + mixing * rng.standard_normal((n, n))
        X = latent @ mix
        support = rng.choice(n, size=max(1, (n + 1) // 2), replace=False)
        coef = np.zeros(n)
        coef[support] = rng.standard_normal(support.size)
        if not np.any(coef):
            coef[support[0]] = 1.0
        Z = X @ coef + noise * rng.standard_normal(m)
        data = np.column_stack([Z, X])
        data = data - data.mean(axis=0)
        sd = data.std(axis=0)
        if np.min(sd) <= 1e-12:
            continue
        data = data / sd
        cov = data.T @ data / m
        C = cov[1:, 1:].copy()
        np.fill_diagonal(C, 1.0)
        return RegressionInstance(C, cov[1:, 0].copy())
    raise DegenerateSample(f"zero-variance column in {max_retries} consecutive draws")


# ---------------------------------------------------------------------------
# Bayesian A-optimal design


@dataclass(frozen=True)
class DesignInstance:
    """Columns of ``X`` (p×n) are candidate observations; prior ``N(0, Lambda)``, noise ``sigma2``."""

    X: np.ndarray
    Lambda: np.ndarray
    sigma2: float
    p: int = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim != 2:
            raise InstanceValidationError("design X must be a p x n matrix")
        try:
            Lam = linalg.as_symmetric(self.Lambda)
        except InvalidArgument as exc:
            raise InstanceValidationError(f"design Lambda: {exc}") from None
        if Lam.shape[0] != X.shape[0]:
            raise InstanceValidationError("Lambda dimension does not match rows of X")
        if np.linalg.eigvalsh(Lam)[0] <= linalg.TAU_PD:
            raise InstanceValidationError("Lambda must be positive definite (proper Gaussian prior)")
        if not self.sigma2 > 0:
            raise InstanceValidationError("sigma2 must be positive")
        X.setflags(write=False)
        Lam.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Lambda", Lam)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "p", X.shape[0])
        object.__setattr__(self, "n", X.shape[1])


def aopt_value(inst: DesignInstance, S: Iterable[int], Lambda_inv: np.ndarray | None = None) -> float:
    """``tr(Λ) − tr((Λ⁻¹ + σ⁻² X_S X_Sᵀ)⁻¹)``."""
    idx = _index_array(S, inst.n)
    if idx.size == 0:
        return 0.0
    if Lambda_inv is None:
        Lambda_inv = linalg.invert_pd(inst.Lambda)
    XS = inst.X[:, idx]
    post = linalg.invert_pd(Lambda_inv + XS @ XS.T / inst.sigma2)
    return float(np.trace(inst.Lambda) - np.trace(post))


class AOptimalObjective(SetFunction):
    kind = "aopt"

    def __init__(self, inst: DesignInstance):
        super().__init__(inst.n)
        self.instance = inst
        self._Lambda_inv = linalg.invert_pd(inst.Lambda)

    def _evaluate(self, S):
        return aopt_value(self.instance, S, self._Lambda_inv)


def generate_design_instance(p: int, n: int, seed, scale: float = 1.0) -> DesignInstance:
    rng = np.random.default_rng(seed)
    X = scale * rng.standard_normal((p, n))
    G = rng.standard_normal((p, p))
    Lam = G @ G.T / p + 0.5 * np.eye(p)
    sigma2 = float(rng.uniform(0.5, 2.0))
    return DesignInstance(X, Lam, sigma2)


# ---------------------------------------------------------------------------
# Worst-case construction for the upper ratio


@dataclass(frozen=True)
class WorstCaseInstance:
    """Symmetric function on ``k`` elements whose value depends only on ``|S|``.

    ``x[i+1] - x[i] = gamma (1 - x[i]) / (k - i)`` for ``i <= k-2`` and
    ``x[k] = 1``.
    """

    k: int
    gamma: float
    x: np.ndarray = field(init=False)

    def __post_init__(self):
        k = int(self.k)
        g = float(self.gamma)
        if k < 1:
            raise InstanceValidationError("worst-case k must be at least 1")
        if not 0.0 < g <= 1.0:
            raise InstanceValidationError("worst-case gamma must lie in (0, 1]")
        x = np.zeros(k + 1)
        for i in range(k - 1):
            x[i + 1] = x[i] + g * (1.0 - x[i]) / (k - i)
        x[k] = 1.0
        x.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "x", x)


def worst_case_value(inst: WorstCaseInstance, S: Iterable[int]) -> float:
    idx = _index_array(S, inst.k)
    return float(inst.x[idx.size])


class WorstCaseObjective(SetFunction):
    kind = "worstcase"

    def __init__(self, inst: WorstCaseInstance):
        super().__init__(inst.k)
        self.instance = inst

    def _evaluate(self, S):
        return float(self.instance.x[len(S)])


# ---------------------------------------------------------------------------
# Submodular baselines


class ModularFunction(SetFunction):
    kind = "modular"

    def __init__(self, weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise InstanceValidationError("modular weights must be nonnegative")
        super().__init__(w.size)
        self.weights = w

    def _evaluate(self, S):
        return float(self.weights[list(S)].sum())


class CoverageFunction(SetFunction):
    """Weighted coverage: total weight of universe items covered by the chosen sets."""

    kind = "coverage"

    def __init__(self, sets: Sequence[Iterable[int]], weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise InstanceValidationError("coverage weights must be nonnegative")
        super().__init__(len(sets))
        self.sets = [sorted({int(u) for u in s}) for s in sets]
        cover = np.zeros((len(sets), w.size), dtype=bool)
        for i, s in enumerate(self.sets):
            if s and (s[0] < 0 or s[-1] >= w.size):
                raise InstanceValidationError(f"coverage set {i} references items outside the universe")
            cover[i, s] = True
        self.weights = w
        self._cover = cover

    def _evaluate(self, S):
        if not S:
            return 0.0
        return float(self.weights[np.any(self._cover[list(S)], axis=0)].sum())


def test_function_value(kind: str, params: dict, S: Iterable[int]) -> float:
    """Evaluate a modular or coverage test function without building an oracle."""
    idx = sorted({int(e) for e in S})
    if kind == "modular":
        return float(sum(params["weights"][e] for e in idx))
    if kind == "coverage":
        covered = set()
        for e in idx:
            covered.update(params["sets"][e])
        return float(sum(params["weights"][u] for u in covered))
    raise InvalidArgument(f"unknown test function kind {kind!r}")


test_function_value.__test__ = False  # keep pytest from collecting it


def random_coverage(n: int, universe: int, rng, density: float = 0.3) -> CoverageFunction:
    """Coverage function with random memberships and uniform(0.5, 2) item weights."""
    rng = np.random.default_rng(rng)
    member = rng.random((n, universe)) < density
    for i in range(n):
        if not member[i].any():
            member[i, rng.integers(universe)] = True
    sets = [np.flatnonzero(row).tolist() for row in member]
    return CoverageFunction(sets, rng.uniform(0.5, 2.0, size=universe))


class TableFunction(SetFunction):
    """Arbitrary function given by its values on all bitmasks."""

    kind = "table"

    def __init__(self, values: Sequence[float]):
        v = np.asarray(values, dtype=float)
        n = int(np.log2(v.size))
        if v.size != 1 << n:
            raise InstanceValidationError("table length must be a power of two")
        if abs(v[0]) > 0:
            raise InstanceValidationError("table must be normalized (f(empty) = 0)")
        super().__init__(n)
        self.values = v

    def _evaluate(self, S):
        return float(self.values[to_mask(S)])


def random_monotone_table(n: int, rng, density: float = 0.5) -> TableFunction:
    """Monotone normalized function with nonnegative random Moebius coefficients.

    These are generally supermodular in places, so they exercise ratios
    away from 1.
    """
    rng = np.random.default_rng(rng)
    size = 1 << n
    w = rng.exponential(1.0, size) * (rng.random(size) < density)
    w[0] = 0.0
    singles = [1 << i for i in range(n)]
    w[singles] += rng.uniform(0.1, 1.0, n)
    v = w.copy()
    masks = np.arange(size)
    for i in range(n):
        has = (masks >> i) & 1 == 1
        v[has] += v[masks[has] ^ (1 << i)]
    return TableFunction(v / v[-1])

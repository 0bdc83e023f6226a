"""Dense symmetric linear algebra for covariance-type matrices.

Everything here works on plain ``numpy`` arrays.  Matrices are small (the
subset enumerations are capped at 20 variables), so eigenvalues come from
LAPACK's symmetric driver and inverses from a Cholesky factorisation.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from .errors import GroundSetTooLarge, InvalidArgument, NotPositiveDefinite

#: Smallest eigenvalue / pivot accepted for a positive definite matrix.
TAU_PD = 1e-10
#: Largest dimension for exhaustive principal-submatrix enumeration.
MAX_SPARSE_N = 20


def as_symmetric(M, atol: float = 1e-9) -> np.ndarray:
    """Return ``M`` as a float array with exactly symmetric entries.

    Asymmetry up to ``atol`` (relative to the largest entry) is averaged
    away; anything larger is rejected.
    """
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidArgument(f"expected a non-empty square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > atol * scale:
        raise InvalidArgument("matrix is not symmetric")
    return 0.5 * (A + A.T)


def _pd_cholesky(M: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("matrix is not positive definite") from None
    if np.min(np.diag(L)) ** 2 <= TAU_PD:
        raise NotPositiveDefinite(
            f"pivot {np.min(np.diag(L)) ** 2:.3e} below tolerance {TAU_PD:g}"
        )
    return L


def cholesky_solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``M x = rhs`` for positive definite ``M`` (raises NotPositiveDefinite)."""
    L = _pd_cholesky(M)
    y = np.linalg.solve(L, rhs)
    return np.linalg.solve(L.T, y)


def quad_form_inverse(M: np.ndarray, v: np.ndarray) -> float:
    """``vᵀ M⁻¹ v`` via a Cholesky solve."""
    L = _pd_cholesky(M)
    y = np.linalg.solve(L, v)
    return float(y @ y)


def invert_pd(M) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix.

    Raises :class:`NotPositiveDefinite` when the smallest eigenvalue is at
    or below ``TAU_PD``.
    """
    A = as_symmetric(M)
    lam = np.linalg.eigvalsh(A)[0]
    if lam <= TAU_PD:
        raise NotPositiveDefinite(f"smallest eigenvalue {lam:.3e} below tolerance {TAU_PD:g}")
    L = _pd_cholesky(A)
    Linv = np.linalg.solve(L, np.eye(A.shape[0]))
    inv = Linv.T @ Linv
    return 0.5 * (inv + inv.T)


def min_eigenvalue(M) -> float:
    return float(np.linalg.eigvalsh(as_symmetric(M))[0])


def max_eigenvalue(M) -> float:
    return float(np.linalg.eigvalsh(as_symmetric(M))[-1])


def sparse_min_eigenvalue(M, k: int) -> float:
    """Minimum of ``λ_min(M[S, S])`` over all index sets with ``|S| = min(k, n)``."""
    A = as_symmetric(M)
    n = A.shape[0]
    if k < 1:
        raise InvalidArgument("k must be at least 1")
    if n > MAX_SPARSE_N:
        raise GroundSetTooLarge(f"exhaustive enumeration capped at n <= {MAX_SPARSE_N}, got {n}")
    size = min(k, n)
    if size == n:
        return float(np.linalg.eigvalsh(A)[0])
    best = np.inf
    for S in combinations(range(n), size):
        idx = np.array(S)
        best = min(best, float(np.linalg.eigvalsh(A[np.ix_(idx, idx)])[0]))
    return best


def woodbury_inverse(A_inv, U, C, V) -> np.ndarray:
    """``(A + U C V)⁻¹`` from ``A⁻¹`` by the Sherman-Morrison-Woodbury formula.

    ``A⁻¹ − A⁻¹ U (C⁻¹ + V A⁻¹ U)⁻¹ V A⁻¹``.  An empty update (``U`` with
    zero columns) returns ``A_inv`` unchanged.
    """
    A_inv = np.asarray(A_inv, dtype=float)
    U = np.asarray(U, dtype=float).reshape(A_inv.shape[0], -1)
    V = np.asarray(V, dtype=float).reshape(-1, A_inv.shape[0])
    if U.shape[1] == 0:
        return A_inv.copy()
    C_inv = invert_pd(C)
    inner = C_inv + V @ A_inv @ U
    if np.allclose(inner, inner.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(inner)))):
        inner_inv = invert_pd(inner)
    else:
        sv = np.linalg.svd(inner, compute_uv=False)
        if sv[-1] <= TAU_PD:
            raise NotPositiveDefinite("inner Woodbury matrix is singular")
        inner_inv = np.linalg.inv(inner)
    return A_inv - A_inv @ U @ inner_inv @ V @ A_inv


def block_inverse(B, U, V, A) -> np.ndarray:
    """Invert ``[[B, U], [V, A]]`` from the blocks using the Schur complement of ``B``."""
    B = np.asarray(B, dtype=float)
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    A = np.asarray(A, dtype=float)
    B_inv = np.linalg.inv(B)
    S = np.linalg.inv(A - V @ B_inv @ U)
    top_left = B_inv + B_inv @ U @ S @ V @ B_inv
    top_right = -B_inv @ U @ S
    bottom_left = -S @ V @ B_inv
    return np.block([[top_left, top_right], [bottom_left, S]])

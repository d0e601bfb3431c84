"""Sparse/dense linear algebra primitives.

Real sparse matrices are carried as ``scipy.sparse.csc_matrix``;
dense matrices and complex vectors are plain numpy arrays.  The two
entry points that the continuation core leans on are :func:`lu_factor`
(sparse LU with an absolute pivot floor, so near-singular mass matrices
surface as :class:`~eigtrack.errors.SingularMatrix` instead of garbage
solutions) and :func:`eig_dense` (full dense eigendecomposition used as
initializer and reference oracle).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, NoConvergence, SingularMatrix

DEFAULT_PIVOT_FLOOR = 1e-14

__all__ = [
    "DEFAULT_PIVOT_FLOOR",
    "LUFactorization",
    "lu_factor",
    "lu_solve",
    "eig_dense",
    "eig_residual",
    "as_csc",
    "read_matrix_market",
    "write_matrix_market",
]


def as_csc(M) -> sp.csc_matrix:
    """Coerce dense/sparse input to CSC with duplicates summed."""
    A = sp.csc_matrix(M)
    A.sum_duplicates()
    return A


class LUFactorization:
    """Immutable sparse LU factorization supporting repeated solves.

    Thin wrapper over SuperLU.  A factorization whose U diagonal
    contains a pivot with magnitude at or below ``pivot_floor`` is
    rejected at construction time.
    """

    def __init__(self, M, pivot_floor: float = DEFAULT_PIVOT_FLOOR):
        M = as_csc(M)
        if M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"matrix is {M.shape}, expected square")
        self.shape = M.shape
        self.pivot_floor = pivot_floor
        try:
            self._lu = spla.splu(M)
        except RuntimeError as exc:  # SuperLU signals exact singularity this way
            raise SingularMatrix(str(exc)) from exc
        diag = np.abs(self._lu.U.diagonal())
        if diag.size and diag.min() <= pivot_floor:
            raise SingularMatrix(
                f"pivot {diag.min():.3e} at or below floor {pivot_floor:.3e}"
            )

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b)
        if b.shape[0] != self.shape[0]:
            raise DimensionMismatch(
                f"rhs has {b.shape[0]} rows, matrix is {self.shape[0]}"
            )
        return self._lu.solve(b)

    def cond_estimate(self) -> float:
        """One-norm condition estimate ||M||_1 * est(||M^-1||_1)."""
        n = self.shape[0]
        op = spla.LinearOperator(
            self.shape,
            matvec=self._lu.solve,
            rmatvec=lambda b: self._lu.solve(b, trans="T"),
        )
        # Rebuild ||M||_1 from the factors: ||M||_1 = ||(LU)^T P^T ...||; cheaper
        # and accurate enough is est via the product of factor norms, but the
        # exact value is recoverable from L@U.  Keep it simple for the sizes used.
        LU = (self._lu.L @ self._lu.U).tocsc()
        norm_M = abs(LU).sum(axis=0).max()
        try:
            inv_norm = spla.onenormest(op)
        except Exception:
            return np.inf
        return float(norm_M * inv_norm)


def lu_factor(M, pivot_floor: float = DEFAULT_PIVOT_FLOOR) -> LUFactorization:
    """Sparse LU factorization of a square real matrix.

    Raises :class:`SingularMatrix` when a pivot falls at or below
    ``pivot_floor``; callers interpret this as proximity to a
    defective/critical point.
    """
    return LUFactorization(M, pivot_floor=pivot_floor)


def lu_solve(F: LUFactorization, b: np.ndarray) -> np.ndarray:
    """Solve M x = b using a previously computed factorization."""
    return F.solve(b)


def eig_dense(A, want_left: bool = False):
    """Full eigendecomposition of a dense real or complex matrix.

    Returns a list of ``(eigenvalue, right, left)`` triples (``left`` is
    None unless requested).  Left vectors are obtained from the
    transposed problem and matched to the right ones by eigenvalue
    proximity, so that ``psi @ A = s * psi`` holds row-wise.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"matrix is {A.shape}, expected square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    left_vecs = [None] * len(w)
    if want_left:
        try:
            wl, Vl = np.linalg.eig(A.T)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc
        used = np.zeros(len(wl), dtype=bool)
        for i, s in enumerate(w):
            dists = np.where(used, np.inf, np.abs(wl - s))
            j = int(np.argmin(dists))
            used[j] = True
            left_vecs[i] = Vl[:, j]
    return [(w[i], V[:, i], left_vecs[i]) for i in range(len(w))]


def eig_residual(A, s: complex, phi: np.ndarray) -> float:
    """Relative residual ||A phi - s phi|| / (||A||_F ||phi||)."""
    A = np.asarray(A)
    r = np.linalg.norm(A @ phi - s * phi)
    return float(r / (np.linalg.norm(A, "fro") * np.linalg.norm(phi)))


def read_matrix_market(path) -> sp.csc_matrix:
    """Read a real coordinate Matrix Market file into CSC form."""
    import scipy.io

    return as_csc(scipy.io.mmread(path))


def write_matrix_market(path, M) -> None:
    """Write a sparse real matrix as 1-based coordinate Matrix Market."""
    import scipy.io

    scipy.io.mmwrite(path, sp.coo_matrix(M), field="real", symmetry="general")

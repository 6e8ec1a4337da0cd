"""Sparse symmetric linear solves and the smallest generalized eigenpairs.

Two eigensolver paths share one result type:

* ``dense``  LAPACK generalized symmetric solver on the assembled matrices,
  used for n <= 2000 and as the cross-check oracle;
* ``shift_invert``  blocked subspace iteration on (A - sigma B)^{-1} B with
  sigma = 0, one sparse LU factorization, Rayleigh-Ritz every sweep.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_MAX = 2000


class SolverError(RuntimeError):
    """Base class for solver failures (maps to CLI exit code 3)."""


class SingularMatrixError(SolverError):
    def __init__(self, msg: str, pivot: int | None = None):
        super().__init__(msg)
        self.pivot = pivot


class NotPositiveDefiniteError(SolverError):
    pass


class ConvergenceError(SolverError):
    pass


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray  # (k,), ascending
    eigenvectors: np.ndarray  # (n, k), B-normalized
    residuals: np.ndarray  # ||A x - lam B x|| / ||B x||
    iterations: int
    solver_id: str

    def __len__(self):
        return len(self.eigenvalues)


def _factorize(A: sp.spmatrix, symmetric: bool):
    A = sp.csc_matrix(A)
    opts = (
        dict(permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options=dict(SymmetricMode=True))
        if symmetric
        else {}
    )
    try:
        lu = spla.splu(A, **opts)
    except RuntimeError as exc:
        # SuperLU does not say where; a tiny shift makes the collapsed pivot visible
        scale = abs(A).max() if A.nnz else 1.0
        shifted = spla.splu(A + 1e-13 * scale * sp.identity(A.shape[0], format="csc"), **opts)
        d = np.abs(shifted.U.diagonal())
        pivot = int(np.argsort(shifted.perm_c)[np.argmin(d)])
        raise SingularMatrixError(f"factorization failed at pivot {pivot}: {exc}", pivot) from exc
    d = np.abs(lu.U.diagonal())
    scale = d.max() if d.size else 1.0
    bad = np.flatnonzero(d <= 1e-14 * scale)
    if bad.size:
        pivot = int(np.argsort(lu.perm_c)[bad[0]])
        raise SingularMatrixError(f"matrix is numerically singular at pivot {pivot}", pivot)
    return lu


def solve_sym_linear(matrix: sp.spmatrix, rhs: np.ndarray, definite: bool = True, rtol: float = 1e-11) -> np.ndarray:
    """Direct sparse solve with a residual check and iterative refinement.

    ``definite=True`` factorizes with symmetric ordering and no pivoting
    (stiffness matrices); ``definite=False`` uses partial pivoting, suited to
    the indefinite saddle systems.
    """
    A = sp.csr_matrix(matrix)
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    rhs = np.asarray(rhs, dtype=float)
    try:
        lu = _factorize(A, symmetric=definite)
    except SingularMatrixError:
        if not definite:
            raise
        lu = _factorize(A, symmetric=False)
    x = lu.solve(rhs)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        return np.zeros_like(rhs)
    for _ in range(3):
        r = rhs - A @ x
        if np.linalg.norm(r) <= rtol * bnorm:
            return x
        x = x + lu.solve(r)
    res = np.linalg.norm(rhs - A @ x) / bnorm
    if res > rtol:
        raise SolverError(f"relative residual {res:.3e} exceeds {rtol:.1e}")
    return x


def _normalize(X: np.ndarray, B) -> np.ndarray:
    X = X / np.sqrt(np.einsum("ij,ij->j", X, B @ X))
    # deterministic sign: largest-magnitude entry positive
    idx = np.argmax(np.abs(X), axis=0)
    return X * np.sign(X[idx, np.arange(X.shape[1])])


def _residuals(A, B, lam, X) -> np.ndarray:
    BX = B @ X
    R = A @ X - BX * lam
    return np.linalg.norm(R, axis=0) / np.linalg.norm(BX, axis=0)


def eigs_dense(A, B, k: int) -> EigenResult:
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    Bd = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    n = Ad.shape[0]
    try:
        lam, X = sla.eigh(Ad, Bd, subset_by_index=[0, k - 1])
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"B is not positive definite: {exc}") from exc
    X = _normalize(X, Bd)
    return EigenResult(lam, X, _residuals(Ad, Bd, lam, X), 1, f"dense-lapack(n={n})")


def eigs_shift_invert(A, B, k: int, tol: float = 1e-10, seed: int = 0, max_iter: int = 500, block: int | None = None) -> EigenResult:
    A = sp.csr_matrix(A)
    B = sp.csr_matrix(B)
    n = A.shape[0]
    p = min(n, block or max(2 * k, k + 8))
    try:
        lu = _factorize(A, symmetric=True)
    except SingularMatrixError:
        lu = _factorize(A, symmetric=False)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    lam = None
    for it in range(1, max_iter + 1):
        Y = lu.solve(B @ X)
        Y, _ = np.linalg.qr(Y)
        Ap = Y.T @ (A @ Y)
        Bp = Y.T @ (B @ Y)
        Ap = 0.5 * (Ap + Ap.T)
        Bp = 0.5 * (Bp + Bp.T)
        try:
            theta, Q = sla.eigh(Ap, Bp)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(f"B is not positive definite: {exc}") from exc
        X = Y @ Q
        lam = theta[:k]
        res = _residuals(A, B, lam, X[:, :k])
        if np.all(res <= tol * np.abs(lam)):
            Xk = _normalize(X[:, :k], B)
            return EigenResult(lam, Xk, _residuals(A, B, lam, Xk), it, f"shift-invert(sigma=0,block={p})")
    raise ConvergenceError(f"no convergence to {tol:.1e} within {max_iter} iterations")


def solve_eigs_smallest(A, B, k: int, tol: float = 1e-10, seed: int = 0, method: str = "auto", max_iter: int = 500) -> EigenResult:
    """Smallest ``k`` eigenpairs of A x = lam B x with x^T B x = 1.

    ``method`` is ``auto`` (dense when n <= 2000), ``dense`` or ``shift_invert``.
    """
    n = A.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}]")
    if method == "auto":
        method = "dense" if n <= DENSE_MAX else "shift_invert"
    if method == "dense":
        return eigs_dense(A, B, k)
    if method == "shift_invert":
        return eigs_shift_invert(A, B, k, tol=tol, seed=seed, max_iter=max_iter)
    raise ValueError(f"unknown eigensolver {method!r}")

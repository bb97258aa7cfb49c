"""Lowest eigenpairs of sparse symmetric matrices.

:func:`lowest_eigenpairs` runs a thick-restart Lanczos iteration with full
reorthogonalization.  Without a shift it works on ``g*I - A`` where ``g`` is
the upper Gershgorin bound, so the wanted end of the spectrum becomes the
dominant one.  With a shift ``sigma`` below the wanted eigenvalues it works
on ``(A - sigma*I)^{-1}``, applied through a sparse LU factorization whose
pivots also give the inertia of ``A - sigma*I``.

:func:`dense_eig` is the cyclic Jacobi oracle for small matrices.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import ldl
from scipy.sparse.linalg import splu

from . import _kernels
from .errors import NotConverged
from .sparse import SparseSymMatrix

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-10
DENSE_INERTIA_LIMIT = 4000


@dataclass(frozen=True)
class EigenRequest:
    k: int = 1
    tol: float = 1e-10
    max_iterations: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class EigenResult:
    """Ascending eigenvalues with orthonormal eigenvectors as columns.

    ``residuals[i]`` is ``||A v_i - values[i] v_i||``, recomputed after the
    iteration with an independent product.  ``degenerate[i]`` flags a value
    within ``DEGENERACY_TOL`` of its predecessor.
    """

    values: np.ndarray
    vectors: np.ndarray = field(repr=False)
    residuals: np.ndarray
    iterations: int
    degenerate: np.ndarray
    sigma: Optional[float] = None
    below_sigma: Optional[int] = None


def _as_operator(A):
    if isinstance(A, SparseSymMatrix):
        return A
    if sp.issparse(A):
        return SparseSymMatrix.from_scipy(A)
    return SparseSymMatrix.from_dense(np.asarray(A, dtype=np.float64))


class ShiftedFactor:
    """Sparse LU of ``A - sigma*I`` with symmetric pivoting.

    With diagonal pivots only, the factorization is ``P^T L U P`` with the
    same row and column permutation, and the number of negative pivots of
    ``U`` equals the number of eigenvalues of ``A`` below ``sigma``.
    """

    def __init__(self, A: SparseSymMatrix, sigma: float):
        M = (A.to_scipy() - sigma * sp.identity(A.dim, format="csr")).tocsc()
        self.sigma = float(sigma)
        self.lu = splu(M, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options=dict(SymmetricMode=True))
        if np.array_equal(self.lu.perm_r, self.lu.perm_c):
            pivots = self.lu.U.diagonal()
            self.below = int(np.count_nonzero(pivots < 0))
        else:  # off-diagonal pivoting happened
            self.below = None

    def solve(self, b):
        return self.lu.solve(b)


def count_below(A, sigma: float) -> int:
    """Number of eigenvalues of ``A`` strictly below ``sigma`` (Sylvester inertia)."""
    A = _as_operator(A)
    below = ShiftedFactor(A, sigma).below
    if below is not None:
        return below
    # a zero diagonal pivot forced row exchanges; use a dense Bunch-Kaufman LDL^T instead
    if A.dim > DENSE_INERTIA_LIMIT:
        raise RuntimeError("factorization used off-diagonal pivots; inertia unavailable")
    _, D, _ = ldl(A.to_dense() - sigma * np.eye(A.dim))
    return int(np.count_nonzero(np.linalg.eigvalsh(D) < 0))


def _thick_restart_lanczos(op, n, nwanted, converged, max_iterations, rng, basis_size,
                           project=None):
    """Largest eigenpairs of the symmetric operator ``op``.

    ``converged(theta, Y)`` returns a boolean per Ritz pair; ``project``
    maps random vectors into the subspace ``op`` acts on.  Returns
    ``(theta, Y, iterations, ok)`` with ``theta`` descending.
    """
    if project is None:
        def project(x):
            return x
    m = min(n, basis_size)
    V = np.empty((n, m + 1))
    T = np.zeros((m, m))
    v = project(rng.standard_normal(n))
    V[:, 0] = v / np.linalg.norm(v)
    start = 0
    iterations = 0
    while True:
        beta = 0.0
        for j in range(start, m):
            w = op(V[:, j])
            iterations += 1
            basis = V[:, : j + 1]
            h = basis.T @ w
            w -= basis @ h
            h2 = basis.T @ w
            w -= basis @ h2
            h += h2
            T[: j + 1, j] = h
            T[j, : j + 1] = h
            beta = float(np.linalg.norm(w))
            scale = max(abs(float(h[j])), 1e-300)
            if beta <= 1e-13 * scale:
                beta = 0.0
                if j + 1 < m:
                    # invariant subspace: continue with a fresh orthogonal direction
                    w = project(rng.standard_normal(n))
                    for _ in range(2):
                        w -= basis @ (basis.T @ w)
                    V[:, j + 1] = w / np.linalg.norm(w)
                continue
            V[:, j + 1] = w / beta
            if j + 1 < m:
                T[j + 1, j] = T[j, j + 1] = beta
        theta, S = np.linalg.eigh(T)
        order = np.argsort(theta)[::-1]
        theta, S = theta[order], S[:, order]
        Y = V[:, :m] @ S[:, :nwanted]
        ok = converged(theta[:nwanted], Y)
        if np.all(ok) or m == n or iterations >= max_iterations:
            return theta[:nwanted], Y, iterations, ok
        keep = min(m - 1, max(nwanted + (m - nwanted) // 2, nwanted + 1))
        couplings = beta * S[m - 1, :keep]
        V[:, :keep] = V[:, :m] @ S[:, :keep]
        V[:, keep] = V[:, m]
        T[:] = 0.0
        T[np.arange(keep), np.arange(keep)] = theta[:keep]
        T[keep, :keep] = couplings
        T[:keep, keep] = couplings
        start = keep


def _deflate(op, n, k, values, Y, iterations, check, to_lambda, req, rng, basis_size):
    """Recover eigenvalues a single Krylov sequence cannot see.

    A Krylov space built from one start vector holds one direction per
    eigenspace, so extra copies of a multiple eigenvalue surface only
    through roundoff.  Each pass runs the iteration on the orthogonal
    complement of the pairs found so far and merges any value below the
    current k-th one.
    """
    for _ in range(k + 1):
        if Y.shape[1] >= n - 1:
            break
        Q, _ = np.linalg.qr(Y)

        def project(x, Q=Q):
            x = x - Q @ (Q.T @ x)
            return x - Q @ (Q.T @ x)

        def deflated(x, project=project):
            return project(op(project(x)))

        theta, Z, its, ok = _thick_restart_lanczos(deflated, n, 1, check, req.max_iterations,
                                                   rng, basis_size, project)
        iterations += its
        lam = to_lambda(theta)
        if not ok[0] or not lam[0] < values.max() - req.tol * max(1.0, abs(lam[0])):
            break
        log.info("deflation pass found %.12g below the k-th value", lam[0])
        values = np.concatenate([values, lam])
        Y = np.hstack([Y, Z])
        order = np.argsort(values)[:k]
        values, Y = values[order], Y[:, order]
    return values, Y, iterations


def _residuals(A: SparseSymMatrix, values, vectors):
    return np.array([np.linalg.norm(A.matvec(vectors[:, i]) - values[i] * vectors[:, i])
                     for i in range(values.size)])


def lowest_eigenpairs(A, req: EigenRequest = EigenRequest(), sigma: Optional[float] = None,
                      basis_size: Optional[int] = None) -> EigenResult:
    """The ``req.k`` smallest eigenpairs of the symmetric matrix ``A``.

    A pair counts as converged once ``||A v - lam v|| <= tol * max(1, |lam|)``.
    Passing ``sigma`` switches to shift-invert mode; ``sigma`` must then lie
    below the wanted eigenvalues and is lowered automatically when the
    inertia of ``A - sigma*I`` shows eigenvalues beneath it.
    """
    A = _as_operator(A)
    n = A.dim
    k = min(req.k, n)
    rng = np.random.Generator(np.random.Philox(req.seed))
    if basis_size is None:
        # shift-invert separates the wanted end well; keep its basis small for big grids
        basis_size = max(3 * k + 20, 60) if sigma is None else max(2 * k + 20, 30)
    low, high = A.gershgorin_bounds()

    def converged_in_A(to_lambda):
        def check(theta, Y):
            lam = to_lambda(theta)
            res = _residuals(A, lam, Y)
            return res <= req.tol * np.maximum(1.0, np.abs(lam))
        return check

    below = None
    if sigma is None:
        shift = high

        def op(x):
            return shift * x - A.matvec(x)

        def to_lambda(theta):
            return shift - theta
    else:
        step = max(1e-3 * (1.0 + abs(sigma)), abs(sigma - low) * 1e-3)
        factor = ShiftedFactor(A, sigma)
        while factor.below is None or factor.below > 0:
            log.info("%s eigenvalues below sigma=%.10g, lowering shift", factor.below, sigma)
            sigma = max(sigma - step, low - step)
            step *= 4.0
            factor = ShiftedFactor(A, sigma)
        below = factor.below
        shift = sigma

        def op(x):
            return factor.solve(x)

        def to_lambda(theta):
            return shift + 1.0 / theta

    check = converged_in_A(to_lambda)
    theta, Y, iterations, ok = _thick_restart_lanczos(
        op, n, k, check, req.max_iterations, rng, basis_size)
    values = to_lambda(theta)
    full_space = min(n, basis_size) == n
    if np.all(ok) and not full_space:
        values, Y, iterations = _deflate(op, n, k, values, Y, iterations, check, to_lambda,
                                         req, rng, basis_size)
    order = np.argsort(values)
    values, Y = values[order], Y[:, order]
    Y = Y / np.linalg.norm(Y, axis=0)
    residuals = _residuals(A, values, Y)
    degenerate = np.zeros(values.size, dtype=bool)
    degenerate[1:] = np.diff(values) <= DEGENERACY_TOL
    bad = residuals > req.tol * np.maximum(1.0, np.abs(values))
    if np.any(bad) and not full_space:
        raise NotConverged(f"residual check failed after {iterations} operator applications",
                           iterations=iterations, values=values, residuals=residuals)
    return EigenResult(values=values, vectors=Y, residuals=residuals, iterations=iterations,
                       degenerate=degenerate, sigma=None if sigma is None else shift,
                       below_sigma=below)


def dense_eig(A, tol: float = 1e-13, max_sweeps: int = 100):
    """Full spectrum of a small dense symmetric matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` sorted ascending.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    if A.shape[0] > 400:
        raise ValueError(f"dense oracle limited to dimension 400, got {A.shape[0]}")
    if not np.allclose(A, A.T, rtol=0, atol=1e-14 * max(1.0, np.abs(A).max(initial=0.0))):
        raise ValueError("matrix is not symmetric")
    vals, vecs, off, _ = _kernels.jacobi_eigh(0.5 * (A + A.T), tol, max_sweeps)
    if off > 1e-12 * max(np.linalg.norm(A), math.ulp(1.0)):
        raise NotConverged(f"Jacobi off-diagonal norm {off:.3e} after {max_sweeps} sweeps")
    order = np.argsort(vals)
    return vals[order], vecs[:, order]

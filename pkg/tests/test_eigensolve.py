import numpy as np
import pytest
import scipy.sparse as sp

from oracles import dirichlet_laplacian_1d, dirichlet_laplacian_2d
from softwg.eigensolve import EigenRequest, EigenResult, count_below, dense_eig, lowest_eigenpairs
from softwg.errors import NotConverged
from softwg.sparse import SparseSymMatrix


def lap1d(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def lap2d(nx, ny):
    return sp.kronsum(lap1d(ny), lap1d(nx), format="csr")


def random_sym(dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim))
    return 0.5 * (a + a.T)


def _check_contract(A, res, tol):
    dense = A.toarray() if sp.issparse(A) else np.asarray(A)
    V = res.vectors
    assert np.max(np.abs(V.T @ V - np.eye(V.shape[1]))) <= 1e-8
    for i, lam in enumerate(res.values):
        r = np.linalg.norm(dense @ V[:, i] - lam * V[:, i])
        assert r <= tol * max(1.0, abs(lam))
        assert res.residuals[i] == pytest.approx(r, abs=1e-12)
    assert np.all(np.diff(res.values) >= -1e-12)


def test_request_validation():
    with pytest.raises(ValueError):
        EigenRequest(k=0)
    with pytest.raises(ValueError):
        EigenRequest(tol=0.0)


def test_diagonal():
    res = lowest_eigenpairs(np.diag([1.0, 2.0, 3.0, 4.0]), EigenRequest(k=2))
    assert isinstance(res, EigenResult)
    assert res.values == pytest.approx([1.0, 2.0], abs=1e-14)
    V = np.abs(res.vectors)
    assert V[:, 0] == pytest.approx([1, 0, 0, 0], abs=1e-12)
    assert V[:, 1] == pytest.approx([0, 1, 0, 0], abs=1e-12)


@pytest.mark.parametrize("sigma", [None, -0.5])
def test_laplacian_1d(sigma):
    A = lap1d(100)
    res = lowest_eigenpairs(A, EigenRequest(k=3, tol=1e-12), sigma=sigma)
    assert np.max(np.abs(res.values - dirichlet_laplacian_1d(100)[:3])) <= 1e-10
    _check_contract(A, res, 1e-12)


@pytest.mark.parametrize("shape,sigma", [((20, 31), None), ((40, 40), -0.1), ((12, 12), None)])
def test_laplacian_2d(shape, sigma):
    A = lap2d(*shape)
    res = lowest_eigenpairs(A, EigenRequest(k=6, tol=1e-11), sigma=sigma)
    assert np.max(np.abs(res.values - dirichlet_laplacian_2d(*shape)[:6])) <= 1e-10
    _check_contract(A, res, 1e-11)


def test_degenerate_pairs_flagged():
    # square grid: modes (1,2) and (2,1) share an eigenvalue
    res = lowest_eigenpairs(lap2d(12, 12), EigenRequest(k=3, tol=1e-11))
    assert res.degenerate.tolist() == [False, False, True]
    V = res.vectors
    assert abs(V[:, 1] @ V[:, 2]) <= 1e-8


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_against_dense(seed):
    a = random_sym(150, seed)
    res = lowest_eigenpairs(a, EigenRequest(k=5, tol=1e-11, seed=seed))
    ref, _ = dense_eig(a)
    assert np.max(np.abs(res.values - ref[:5])) <= 1e-9
    _check_contract(a, res, 1e-11)


def test_shift_invert_lowers_sigma_past_eigenvalues():
    A = lap1d(200)
    res = lowest_eigenpairs(A, EigenRequest(k=2, tol=1e-12), sigma=0.01)
    assert res.sigma < dirichlet_laplacian_1d(200)[0]
    assert res.below_sigma == 0
    assert res.values == pytest.approx(dirichlet_laplacian_1d(200)[:2], abs=1e-10)


def test_deterministic_given_seed():
    a = random_sym(300, 7)
    r1 = lowest_eigenpairs(a, EigenRequest(k=3, seed=11))
    r2 = lowest_eigenpairs(a, EigenRequest(k=3, seed=11))
    assert np.array_equal(r1.values, r2.values)
    assert np.array_equal(r1.vectors, r2.vectors)


def test_not_converged_carries_best_so_far():
    A = lap1d(2000)
    with pytest.raises(NotConverged) as info:
        lowest_eigenpairs(A, EigenRequest(k=2, tol=1e-12, max_iterations=60))
    err = info.value
    assert err.iterations >= 60
    assert len(err.values) == 2 and len(err.residuals) == 2


def test_count_below():
    A = lap1d(150)
    ref = dirichlet_laplacian_1d(150)
    for sigma in (0.0, 0.01, 0.5, 2.0):
        assert count_below(A, sigma) == int(np.count_nonzero(ref < sigma))
    a = random_sym(150, 3)
    assert count_below(a, 0.0) == int(np.count_nonzero(np.linalg.eigvalsh(a) < 0))


def test_dense_eig_examples():
    vals, vecs = dense_eig(np.eye(5))
    assert vals == pytest.approx(np.ones(5))
    vals, _ = dense_eig([[2.0, 1.0], [1.0, 2.0]])
    assert vals == pytest.approx([1.0, 3.0], abs=1e-15)
    vals, vecs = dense_eig(lap1d(10).toarray())
    assert np.max(np.abs(vals - dirichlet_laplacian_1d(10))) <= 1e-13
    assert np.max(np.abs(vecs.T @ vecs - np.eye(10))) <= 1e-13


def test_dense_eig_off_diagonal_norm():
    a = random_sym(60, 5)
    vals, vecs = dense_eig(a)
    D = vecs.T @ a @ vecs
    off = np.linalg.norm(D - np.diag(np.diag(D)))
    assert off <= 1e-12 * np.linalg.norm(a)
    assert vals == pytest.approx(np.linalg.eigvalsh(a), abs=1e-11)


def test_dense_eig_rejects():
    with pytest.raises(ValueError):
        dense_eig(np.zeros((401, 401)))
    with pytest.raises(ValueError):
        dense_eig([[1.0, 2.0], [0.0, 1.0]])


def test_sparse_matrix_helpers(tmp_path):
    A = SparseSymMatrix.from_scipy(lap2d(4, 5))
    lo, hi = A.gershgorin_bounds()
    assert lo == 0.0 and hi == 8.0
    assert A.symmetry_defect() == 0.0
    x = np.arange(A.dim, dtype=float)
    assert A @ x == pytest.approx(lap2d(4, 5) @ x)
    path = tmp_path / "a.txt"
    A.dump(path)
    assert path.read_text().splitlines()[0] == f"{A.dim} {A.nnz}"
    B = SparseSymMatrix.load(path)
    assert np.array_equal(A.to_dense(), B.to_dense())

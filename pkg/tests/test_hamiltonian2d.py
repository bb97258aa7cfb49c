import math

import numpy as np
import pytest

from oracles import dirichlet_laplacian_2d
from softwg.eigensolve import EigenRequest, lowest_eigenpairs
from softwg.errors import GridTooCoarse, NotConverged
from softwg.geometry import WaveguideGeometry
from softwg.hamiltonian2d import (
    Grid2D,
    PotentialField,
    SpectralReport,
    assemble,
    discrete_spectrum,
    essential_threshold,
    sample_potential,
)
from softwg.sparse import SparseSymMatrix
from softwg.transverse import Delta, SquareWell, solve_double_well, solve_ground_state

G = WaveguideGeometry(4.0, math.pi / 2, 0.5)
SMALL = WaveguideGeometry(2.0, math.pi / 2, 0.5)
FLAT = WaveguideGeometry(4.0, 0.0, 0.5)
WELL = SquareWell(2.0, 0.5)


def test_grid_validation():
    g = Grid2D(-1.0, 1.0, 0.0, 3.0, 0.5)
    assert (g.nx, g.ny, g.dim) == (3, 5, 15)
    assert g.xs == pytest.approx([-0.5, 0.0, 0.5])
    assert g.index(2, 4) == 14
    assert g.refined().h == 0.25
    with pytest.raises(ValueError):
        Grid2D(0.0, 1.0, 0.0, 1.0, 0.3)
    with pytest.raises(ValueError):
        Grid2D(0.0, 1.0, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        Grid2D(0.0, 1.0, 0.0, 1.0, 1.0)


def test_laplacian_3x3():
    grid = Grid2D(0.0, 4.0, 0.0, 4.0, 1.0)
    A = assemble(grid, PotentialField(np.zeros(9)))
    D = A.to_dense()
    expected = 4 * np.eye(9)
    for ix in range(3):
        for iy in range(3):
            for jx, jy in ((ix + 1, iy), (ix, iy + 1)):
                if jx < 3 and jy < 3:
                    expected[grid.index(ix, iy), grid.index(jx, jy)] = -1
                    expected[grid.index(jx, jy), grid.index(ix, iy)] = -1
    assert np.array_equal(D, expected)
    assert np.linalg.eigvalsh(D) == pytest.approx(dirichlet_laplacian_2d(3, 3), abs=1e-13)


def test_assembly_structure():
    grid = Grid2D(-3.0, 3.0, -2.0, 4.0, 0.25)
    field = sample_potential(SMALL, WELL, grid)
    A = assemble(grid, field)
    assert A.symmetry_defect() == 0.0
    assert np.max(np.diff(A.indptr)) <= 5
    assert A.diagonal() == pytest.approx(4 / grid.h ** 2 + field.values, abs=0)
    free = assemble(grid, PotentialField(np.zeros(grid.dim)))
    rows = np.asarray(free.to_scipy().sum(axis=1)).ravel().reshape(grid.nx, grid.ny)
    assert np.all(rows[1:-1, 1:-1] == 0.0)
    assert lowest_eigenpairs(free, EigenRequest(k=1)).values[0] > 0
    with pytest.raises(ValueError):
        assemble(grid, PotentialField(np.zeros(3)))


def test_node_values():
    grid = Grid2D(-2.0, 2.0, -2.0, 12.0, 0.25)
    field = sample_potential(G, SquareWell(1.0, 0.5), grid, method="point").as_grid(grid)
    ix0 = int(np.argmin(np.abs(grid.xs)))
    iy0 = int(np.argmin(np.abs(grid.ys)))
    iy10 = int(np.argmin(np.abs(grid.ys - 10.0)))
    assert field[ix0, iy0] == -1.0
    assert field[ix0, iy10] == 0.0
    # nodes on the cut-locus carry no potential
    iy4 = int(np.argmin(np.abs(grid.ys - 4.0)))
    assert field[ix0, iy4] == 0.0
    assert set(np.unique(field)) <= {-1.0, 0.0}


def test_cell_average_bounded_and_zero_far_away():
    grid = Grid2D(-6.0, 6.0, -4.0, 6.0, 0.25)
    v = sample_potential(SMALL, WELL, grid).values
    assert np.all((v <= 0.0) & (v >= -2.0))
    X, Y = np.meshgrid(grid.xs, grid.ys, indexing="ij")
    far = (np.abs(Y) > 1.0) & (np.abs(X) < 0.5) & (Y < 1.0)
    assert np.all(v.reshape(grid.nx, grid.ny)[far] == 0.0)


@pytest.mark.parametrize("method", ["cell", "point"])
def test_straight_slab_mass(method):
    exact = -2 * 0.5 * 1.5 * 10.0
    errs = []
    for h in (1 / 8, 1 / 16):
        grid = Grid2D(-5.0, 5.0, -2.0, 2.0, h)
        v = sample_potential(FLAT, SquareWell(1.5, 0.5), grid, method=method).values
        errs.append(abs(h * h * v.sum() - exact))
        assert errs[-1] <= 1.5 * 10.0 * 2 * h
    assert errs[1] / errs[0] == pytest.approx(0.5, rel=0.1)


def test_mirror_symmetry():
    grid = Grid2D(-6.0, 6.0, -4.0, 6.0, 1 / 8)
    field = sample_potential(SMALL, WELL, grid)
    V = field.as_grid(grid)
    assert np.array_equal(V, V[::-1, :])
    res = lowest_eigenpairs(assemble(grid, field), EigenRequest(k=1, tol=1e-11))
    u = res.vectors[:, 0].reshape(grid.nx, grid.ny)
    u = u / np.linalg.norm(u)
    assert np.max(np.abs(u - u[::-1, :])) <= 1e-6


def test_rayleigh_spot_check():
    grid = Grid2D(-6.0, 6.0, -4.0, 6.0, 1 / 4)
    A = assemble(grid, sample_potential(SMALL, WELL, grid))
    lam = lowest_eigenpairs(A, EigenRequest(k=1, tol=1e-11)).values[0]
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.standard_normal(grid.dim)
        assert x @ A.matvec(x) / (x @ x) >= lam
    S = A.to_scipy()
    assert np.linalg.eigvalsh(S.toarray())[0] == pytest.approx(lam, abs=1e-9)


def test_nested_boxes_decrease():
    vals = []
    for L in (3.0, 4.0, 6.0):
        grid = Grid2D(-L, L, -L, L, 1 / 8)
        A = assemble(grid, sample_potential(SMALL, WELL, grid))
        vals.append(lowest_eigenpairs(A, EigenRequest(k=1, tol=1e-11)).values[0])
    assert vals[0] > vals[1] > vals[2]


def test_delta_regularization():
    grid = Grid2D(-4.0, 4.0, -3.0, 5.0, 1 / 8)
    field = sample_potential(SMALL, Delta(-1.0), grid, method="point")
    assert field.regularization_eps == 0.5
    assert field.values.min() == -1.0
    with pytest.raises(GridTooCoarse):
        sample_potential(SMALL, Delta(-1.0), grid, eps=0.2)
    bounded = sample_potential(SMALL, WELL, grid)
    assert bounded.regularization_eps == 0.0


def test_support_wider_than_channel_rejected():
    grid = Grid2D(-4.0, 4.0, -3.0, 5.0, 1 / 4)
    with pytest.raises(ValueError):
        sample_potential(SMALL, SquareWell(1.0, 0.8), grid)
    with pytest.raises(ValueError):
        sample_potential(SMALL, WELL, grid, method="bilinear")


def test_essential_threshold_switch():
    assert essential_threshold(G, Delta(-1.0)) == -0.25
    half = WaveguideGeometry(4.0, math.pi, 0.5)
    e1r = essential_threshold(half, Delta(-1.0))
    assert e1r < -0.25
    assert e1r == solve_double_well(Delta(-1.0), 4.0).E1R
    assert essential_threshold(FLAT, WELL) == solve_ground_state(WELL).E1


def test_discrete_spectrum_small_bend():
    grid = Grid2D(-8.0, 8.0, -6.0, 8.0, 1 / 4)
    rep = discrete_spectrum(SMALL, WELL, grid, k=1, tol=5e-2)
    assert isinstance(rep, SpectralReport)
    assert rep.threshold == solve_ground_state(WELL).E1
    assert np.all(np.diff(rep.eigenvalues) >= 0)
    assert rep.margins == pytest.approx(rep.threshold - rep.eigenvalues)
    assert rep.binding_count == int(np.count_nonzero(rep.binding_mask()))
    assert len(rep.levels) == 2 and rep.levels[1].h == grid.h / 2
    # adaptive k keeps one value above the threshold
    assert rep.eigenvalues.size >= rep.binding_count + 1
    conv = rep.convergence
    assert conv["h"] == [0.25, 0.125] and len(conv["values"]) == 2


def test_discrete_spectrum_not_converged_keeps_report():
    grid = Grid2D(-8.0, 8.0, -6.0, 8.0, 1 / 4)
    with pytest.raises(NotConverged) as info:
        discrete_spectrum(SMALL, WELL, grid, k=1, tol=1e-9)
    rep = info.value.report
    assert isinstance(rep, SpectralReport)
    assert rep.disagreement[0] > 1e-9


def test_matrix_dump_round_trip(tmp_path):
    grid = Grid2D(-2.0, 2.0, -1.0, 2.0, 0.5)
    A = assemble(grid, sample_potential(SMALL, WELL, grid))
    path = tmp_path / "h.txt"
    A.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0] == f"{A.dim} {A.nnz}"
    r, c, v = lines[1].split()
    assert int(r) == 0 and float(v) == A.to_dense()[0, int(c)]
    B = SparseSymMatrix.load(path)
    assert np.array_equal(A.to_dense(), B.to_dense())

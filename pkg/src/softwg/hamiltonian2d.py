"""Finite-difference model of ``H = -Laplacian + V`` on a truncated box.

The potential is ``V(x) = W(t(x))`` with ``t`` the signed distance coordinate
of the Fermi map.  Each grid cell receives the average of ``V`` over the
cell (midpoint rule on ``m x m`` sub-points), which keeps the well edges
from degrading the second-order accuracy of the 5-point stencil.  Point
sampling is available as ``method="point"``.

:func:`discrete_spectrum` solves at ``h`` and ``h/2``, extrapolates, and
counts eigenvalues that sit below the essential threshold by more than
three times the refinement disagreement.
"""

import gc
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .eigensolve import EigenRequest, count_below, lowest_eigenpairs
from .errors import GridTooCoarse, NotConverged
from .geometry import WaveguideGeometry
from .sparse import SparseSymMatrix
from .transverse import Delta, solve_double_well, solve_ground_state

log = logging.getLogger(__name__)

__all__ = [
    "Grid2D", "PotentialField", "SparseSymMatrix", "SpectralReport", "LevelResult",
    "sample_potential", "assemble", "essential_threshold", "discrete_spectrum",
    "regularize_delta",
]


@dataclass(frozen=True)
class Grid2D:
    """Box ``[x_min, x_max] x [y_min, y_max]`` with Dirichlet walls and spacing ``h``.

    Unknowns live on the interior nodes, ordered ``ix * ny + iy``.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        for lo, hi, name in ((self.x_min, self.x_max, "x"), (self.y_min, self.y_max, "y")):
            if not hi > lo:
                raise ValueError(f"empty {name}-range")
            steps = (hi - lo) / self.h
            if abs(steps - round(steps)) > 1e-9 * steps:
                raise ValueError(f"{name}-extent {hi - lo} is not a multiple of h={self.h}")
            if round(steps) < 2:
                raise ValueError(f"{name}-range has no interior node")

    @property
    def nx(self) -> int:
        return int(round((self.x_max - self.x_min) / self.h)) - 1

    @property
    def ny(self) -> int:
        return int(round((self.y_max - self.y_min) / self.h)) - 1

    @property
    def dim(self) -> int:
        return self.nx * self.ny

    @property
    def xs(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(1, self.nx + 1)

    @property
    def ys(self) -> np.ndarray:
        return self.y_min + self.h * np.arange(1, self.ny + 1)

    def refined(self) -> "Grid2D":
        return Grid2D(self.x_min, self.x_max, self.y_min, self.y_max, 0.5 * self.h)

    def index(self, ix: int, iy: int) -> int:
        return ix * self.ny + iy

    def padding_ok(self, g: WaveguideGeometry, support: float, decay: float,
                   padding: float = 15.0) -> bool:
        """Does the box hold the curved core, widened by ``support + padding/decay``?"""
        pad = support + padding / decay
        tau = 0.5 * g.theta
        xs = [g.R * math.sin(tau), -g.R * math.sin(tau)]
        ys = [g.R * (1 - math.cos(tau)), 0.0]
        return (self.x_min <= min(xs) - pad and self.x_max >= max(xs) + pad
                and self.y_min <= min(ys) - pad)


@dataclass
class PotentialField:
    values: np.ndarray = field(repr=False)
    regularization_eps: float = 0.0
    method: str = "cell"
    subsamples: int = 16

    def as_grid(self, grid: Grid2D) -> np.ndarray:
        return self.values.reshape(grid.nx, grid.ny)


def regularize_delta(profile: Delta, eps: float):
    return profile.regularized(eps)


def _bounded_profile(profile, grid: Grid2D, eps: Optional[float]):
    if isinstance(profile, Delta):
        eps = 4.0 * grid.h if eps is None else float(eps)
        if eps < 2.0 * grid.h:
            raise GridTooCoarse(f"regularization width {eps:g} is below 2h = {2 * grid.h:g}")
        return profile.regularized(eps), eps
    return profile, 0.0


def sample_potential(g: WaveguideGeometry, profile, grid: Grid2D, method: str = "cell",
                     subsamples: int = 16, eps: Optional[float] = None) -> PotentialField:
    """``V = W(t)`` at the interior nodes, cell-averaged or point-sampled.

    A delta profile is replaced by the square well of half-width ``eps``
    (default ``4h``) and depth ``|alpha| / (2 eps)``.
    """
    if method not in ("cell", "point"):
        raise ValueError(f"unknown sampling method {method!r}")
    bounded, eps = _bounded_profile(profile, grid, eps)
    support = bounded.support
    if support > g.a * (1 + 1e-12):
        raise ValueError(f"profile support {support} exceeds the half-width a={g.a}")
    m = 1 if method == "point" else int(subsamples)
    if m < 1:
        raise ValueError("subsamples must be positive")
    lo, hi, vlo, vhi = (np.ascontiguousarray(p, dtype=np.float64) for p in bounded.pieces())
    reach = support + (grid.h if m > 1 else 0.0)
    values = _kernels.cell_average_potential(g.R, g.theta, grid.xs, grid.ys, grid.h, m,
                                             lo, hi, vlo, vhi, reach)
    return PotentialField(values=values, regularization_eps=eps, method=method, subsamples=m)


def assemble(grid: Grid2D, field: PotentialField) -> SparseSymMatrix:
    """Dirichlet 5-point Laplacian plus ``diag(V)``."""
    if field.values.shape != (grid.dim,):
        raise ValueError(f"field has {field.values.size} values, grid has {grid.dim} nodes")
    indptr, indices, data = _kernels.assemble_5pt(grid.nx, grid.ny, grid.h, field.values)
    return SparseSymMatrix(indptr, indices, data, grid.dim)


def essential_threshold(g: WaveguideGeometry, profile, disc1d=None) -> float:
    """Bottom of the essential spectrum: ``E1``, or ``E_{1,R}`` when ``theta = pi``."""
    if g.theta == math.pi:
        return solve_double_well(profile, g.R, disc1d).E1R
    return solve_ground_state(profile, disc1d).E1


@dataclass
class LevelResult:
    h: float
    values: np.ndarray
    residuals: np.ndarray
    iterations: int
    sigma: float
    dim: int


@dataclass
class SpectralReport:
    """Extrapolated eigenvalues against the essential threshold.

    ``binding_count`` counts the ``i`` with
    ``eigenvalues[i] < threshold - 3 * disagreement[i]``; ``margins`` are
    ``threshold - eigenvalues``.
    """

    eigenvalues: np.ndarray
    threshold: float
    binding_count: int
    margins: np.ndarray
    disagreement: np.ndarray
    levels: list
    tol: float
    regularization_eps: float = 0.0

    @property
    def convergence(self) -> dict:
        return {
            "h": [lv.h for lv in self.levels],
            "values": [lv.values.tolist() for lv in self.levels],
            "extrapolated": self.eigenvalues.tolist(),
            "disagreement": self.disagreement.tolist(),
        }

    def binding_mask(self) -> np.ndarray:
        return self.eigenvalues < self.threshold - 3.0 * self.disagreement


def _solve_level(g, profile, grid, k, sigma, req, method, subsamples, eps):
    field = sample_potential(g, profile, grid, method=method, subsamples=subsamples, eps=eps)
    A = assemble(grid, field)
    del field
    res = lowest_eigenpairs(A, EigenRequest(k=k, tol=req.tol, max_iterations=req.max_iterations,
                                            seed=req.seed), sigma=sigma)
    log.info("h=%g dim=%d sigma=%.8g values=%s", grid.h, A.dim, res.sigma, res.values)
    return A, res


def discrete_spectrum(g: WaveguideGeometry, profile, grid: Grid2D, k: int = 1,
                      tol: float = 1e-3, solver_tol: float = 1e-9, seed: int = 0,
                      method: str = "cell", subsamples: int = 16,
                      eps: Optional[float] = None, adaptive_k: bool = True,
                      threshold: Optional[float] = None) -> SpectralReport:
    """Lowest eigenvalues at ``h`` and ``h/2`` with Richardson extrapolation.

    With ``adaptive_k`` the count is raised, using the inertia of the coarse
    matrix, so that at least one computed eigenvalue lies above the
    threshold.  For a delta profile the comparison threshold is that of
    its regularized well (width fixed by the coarse grid), which is the
    operator actually discretized on both levels.
    """
    bounded, eps = _bounded_profile(profile, grid, eps)
    if threshold is None:
        threshold = essential_threshold(g, bounded)
    gs = solve_ground_state(bounded)
    if not grid.padding_ok(g, bounded.support, gs.decay):
        log.warning("box may be too small: padding below 15 decay lengths")
    req = EigenRequest(k=k, tol=solver_tol, seed=seed)

    coarse_grid = grid
    field = sample_potential(g, bounded, coarse_grid, method=method, subsamples=subsamples)
    A = assemble(coarse_grid, field)
    del field
    if adaptive_k:
        below = count_below(A, threshold)
        k = max(k, below + 2)
    sigma = threshold - 0.05 * abs(threshold) - 1e-3
    res = lowest_eigenpairs(A, EigenRequest(k=k, tol=solver_tol, seed=seed), sigma=sigma)
    levels = [LevelResult(grid.h, res.values, res.residuals, res.iterations, res.sigma, A.dim)]
    del A, res
    gc.collect()

    fine_grid = grid.refined()
    # eigenvalues move by O(h^2) under refinement; start just under the coarse ground value
    spread = max(abs(levels[0].values[0]) * 2e-3, 1e-3)
    sigma = float(levels[0].values[0]) - spread
    _, res = _solve_level(g, bounded, fine_grid, k, sigma, req, method, subsamples, None)
    levels.append(LevelResult(fine_grid.h, res.values, res.residuals, res.iterations, res.sigma,
                              fine_grid.dim))
    del res
    gc.collect()

    coarse, fine = levels[0].values, levels[1].values
    extrapolated = (4.0 * fine - coarse) / 3.0
    disagreement = np.abs(fine - coarse)
    order = np.argsort(extrapolated)
    extrapolated, disagreement = extrapolated[order], disagreement[order]
    margins = threshold - extrapolated
    binding = int(np.count_nonzero(extrapolated < threshold - 3.0 * disagreement))
    report = SpectralReport(eigenvalues=extrapolated, threshold=threshold, binding_count=binding,
                            margins=margins, disagreement=disagreement, levels=levels, tol=tol,
                            regularization_eps=eps)
    if np.any(disagreement[:max(1, binding)] > tol):
        err = NotConverged(f"refinement disagreement {disagreement.max():.3e} exceeds tol {tol:g}",
                           iterations=sum(lv.iterations for lv in levels), values=extrapolated,
                           residuals=levels[-1].residuals)
        err.report = report
        raise err
    return report

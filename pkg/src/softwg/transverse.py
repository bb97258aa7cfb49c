"""One-dimensional cross-section problems.

``T = -d^2/dt^2 + W(t)`` is the transverse operator of the waveguide and
``T_R = -d^2/dt^2 + W(t - R) + W(-t - R)`` its mirrored double-well
counterpart.  Bounded profiles are discretized by second-order finite
differences on ``(-L, L)`` with Dirichlet ends; the potential enters through
exact cell averages so that a well edge sitting on a node costs only
``O(h^2)``.  The lowest eigenvalue comes from Sturm-sequence bisection and
is Richardson-extrapolated over ``h`` and ``h/2``.

The delta profile ``alpha * delta(t)`` is handled in closed form.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import newton
from scipy.linalg import solve_banded

from . import _kernels
from .errors import (
    DiscretizationTooCoarse,
    NoBoundState,
    TailNotExponential,
    ZeroTestFunction,
)

# Eigenvalues at or above -NO_BOUND_TOL count as "no bound state".
NO_BOUND_TOL = 1e-10


# ---------------------------------------------------------------------------
# Profiles
# ---------------------------------------------------------------------------

class _PiecewiseLinear:
    """Shared behaviour of bounded profiles given as linear pieces."""

    def pieces(self):
        raise NotImplementedError

    @property
    def support(self) -> float:
        lo, hi, _, _ = self.pieces()
        return float(max(abs(lo[0]), abs(hi[-1])))

    def __call__(self, t):
        lo, hi, vlo, vhi = self.pieces()
        out = _kernels._piecewise_value_numpy(np.asarray(t, dtype=np.float64), lo, hi, vlo, vhi)
        return out if np.ndim(t) else float(out)

    def antiderivative(self, t):
        """``F(t) = int_{-inf}^t W``."""
        t = np.asarray(t, dtype=np.float64)
        lo, hi, vlo, vhi = self.pieces()
        out = np.zeros(t.shape)
        for a, b, va, vb in zip(lo, hi, vlo, vhi):
            u = np.clip(t, a, b) - a
            width = b - a
            out += va * u + (vb - va) * u * u / (2.0 * width)
        return out

    def cell_average(self, t, h):
        """Mean of ``W`` over ``[t - h/2, t + h/2]``."""
        t = np.asarray(t, dtype=np.float64)
        return (self.antiderivative(t + 0.5 * h) - self.antiderivative(t - 0.5 * h)) / h

    def integral(self) -> float:
        return float(self.antiderivative(np.inf))

    def breakpoints(self):
        lo, hi, _, _ = self.pieces()
        return np.unique(np.concatenate([lo, hi]))


@dataclass(frozen=True)
class Delta:
    """Point interaction ``alpha * delta(t)`` with ``alpha < 0``."""

    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha < 0):
            raise ValueError(f"delta coupling must be negative, got {self.alpha}")

    support = 0.0

    def integral(self) -> float:
        return self.alpha

    def regularized(self, eps: float) -> "SquareWell":
        """Square well of width ``2*eps`` carrying the same integral."""
        return SquareWell(V0=abs(self.alpha) / (2.0 * eps), half_width=eps)


@dataclass(frozen=True)
class SquareWell(_PiecewiseLinear):
    """``W = -V0`` on ``(-half_width, half_width)``, zero outside."""

    V0: float
    half_width: float

    def __post_init__(self):
        if not (math.isfinite(self.V0) and self.V0 > 0):
            raise ValueError(f"V0 must be positive, got {self.V0}")
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    def pieces(self):
        a = self.half_width
        return (np.array([-a]), np.array([a]), np.array([-self.V0]), np.array([-self.V0]))


@dataclass(frozen=True)
class Tabulated(_PiecewiseLinear):
    """Piecewise-linear interpolant of ``(knots, values)``; zero outside the knots."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if k.ndim != 1 or k.shape != v.shape or k.size < 2:
            raise ValueError("need at least two knots and one value per knot")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(v))):
            raise ValueError("knots and values must be finite")
        if np.any(np.diff(k) <= 0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "knots", tuple(float(x) for x in k))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def pieces(self):
        k = np.asarray(self.knots)
        v = np.asarray(self.values)
        return k[:-1], k[1:], v[:-1], v[1:]

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        """Two columns ``t,W``; ``#`` comments and one text header row are skipped."""
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
        if lines:
            try:
                float(lines[0].split(",")[0])
            except ValueError:
                lines = lines[1:]
        data = np.loadtxt(lines, delimiter=",", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns t,W")
        return cls(tuple(data[:, 0]), tuple(data[:, 1]))


TransverseProfile = Union[Delta, SquareWell, Tabulated]


# ---------------------------------------------------------------------------
# Finite-difference machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Discretization1D:
    """Uniform grid on ``(-L, L)`` with spacing ``h`` and Dirichlet ends."""

    L: float
    h: float

    def __post_init__(self):
        if self.h <= 0 or self.L <= 0:
            raise ValueError("L and h must be positive")
        ratio = 2.0 * self.L / self.h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"2L/h must be an integer, got {ratio}")

    @property
    def intervals(self) -> int:
        return int(round(2.0 * self.L / self.h))

    def nodes(self) -> np.ndarray:
        return -self.L + self.h * np.arange(1, self.intervals)

    def refined(self) -> "Discretization1D":
        return Discretization1D(self.L, 0.5 * self.h)


def _round_up(x, h):
    return h * math.ceil(x / h - 1e-12)


def default_discretization(profile, h: float = 1.0 / 64, R: float = 0.0,
                           decay_lengths: float = 20.0) -> Discretization1D:
    """Grid whose half-length leaves ``decay_lengths`` decay lengths of tail.

    The decay rate comes from a coarse first pass, repeated while the
    estimate keeps asking for a longer interval.
    """
    if isinstance(profile, Delta):
        kappa = 0.5 * abs(profile.alpha)
        return Discretization1D(_round_up(R + decay_lengths / kappa, h), h)
    base = profile.support + R
    L = _round_up(base + 2.0 * decay_lengths, h)
    for _ in range(4):
        coarse = Discretization1D(L, h)
        d, e = fd_matrix(profile, coarse, R=R or None)
        E = tridiagonal_eigenvalues(d, e, 1)[0]
        if E >= -NO_BOUND_TOL:
            raise NoBoundState(f"lowest transverse eigenvalue {E:.3e} is not negative")
        wanted = _round_up(base + decay_lengths / math.sqrt(-E), h)
        if wanted <= L:
            return Discretization1D(wanted, h)
        L = wanted
    return Discretization1D(L, h)


def fd_matrix(profile, disc: Discretization1D, R: Optional[float] = None):
    """Diagonal and off-diagonal of the FD matrix of ``T`` (or ``T_R``)."""
    t = disc.nodes()
    h = disc.h
    d = np.full(t.size, 2.0 / (h * h))
    e = np.full(t.size - 1, -1.0 / (h * h))
    if isinstance(profile, Delta):
        for pos in ((0.0,) if R is None else (R, -R)):
            j = int(round((pos + disc.L) / h)) - 1
            if not (0 <= j < t.size) or abs(t[j] - pos) > 1e-9 * h:
                raise ValueError(f"no grid node at delta position {pos}")
            d[j] += profile.alpha / h
    elif R is None:
        d += profile.cell_average(t, h)
    else:
        d += profile.cell_average(t - R, h) + profile.cell_average(-t - R, h)
    return d, e


def tridiagonal_eigenvalues(d, e, count: int = 1) -> np.ndarray:
    """Lowest ``count`` eigenvalues of a symmetric tridiagonal matrix by bisection."""
    d = np.asarray(d, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    e2 = e * e
    pivmin = np.finfo(float).tiny * max(1.0, float(e2.max(initial=0.0)))
    ae = np.abs(e)
    radius = np.zeros(d.size)
    radius[:-1] += ae
    radius[1:] += ae
    glo = float(np.min(d - radius))
    ghi = float(np.max(d + radius))
    eps = np.finfo(float).eps
    out = np.empty(count)
    nprobe = 15
    for j in range(count):
        lo, hi = glo, ghi
        for _ in range(200):
            if hi - lo <= 4.0 * eps * max(abs(lo), abs(hi)) + pivmin:
                break
            xs = np.linspace(lo, hi, nprobe + 2)[1:-1]
            cnt = _kernels.sturm_counts(d, e2, xs, pivmin)
            below = np.nonzero(cnt <= j)[0]
            above = np.nonzero(cnt > j)[0]
            if below.size:
                lo = max(lo, float(xs[below[-1]]))
            if above.size:
                hi = min(hi, float(xs[above[0]]))
        out[j] = 0.5 * (lo + hi)
    return out


def inverse_iteration(d, e, lam: float, iterations: int = 3) -> np.ndarray:
    """Unit eigenvector for ``lam`` of the tridiagonal matrix (positive sum)."""
    n = d.size
    scale = float(np.max(np.abs(d)) + 2 * np.max(np.abs(e), initial=0.0))
    shift = lam - 8.0 * np.finfo(float).eps * scale
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[1, :] = d - shift
    ab[2, :-1] = e
    v = np.ones(n) / math.sqrt(n)
    for _ in range(iterations):
        v = solve_banded((1, 1), ab, v)
        v /= np.linalg.norm(v)
    if v.sum() < 0:
        v = -v
    return v


def tridiagonal_matvec(d, e, v):
    out = d * v
    out[:-1] += e * v[1:]
    out[1:] += e * v[:-1]
    return out


@dataclass(frozen=True)
class FDLevel:
    """One finite-difference solve: eigenvalues and grid eigenvector."""

    h: float
    L: float
    E: float
    E2: float
    t: np.ndarray = field(repr=False)
    vector: np.ndarray = field(repr=False)  # grid values normalized to sum(v^2) h = 1
    residual: float = 0.0


def fd_solve(profile, disc: Discretization1D, R: Optional[float] = None) -> FDLevel:
    d, e = fd_matrix(profile, disc, R=R)
    E, E2 = tridiagonal_eigenvalues(d, e, 2)
    v = inverse_iteration(d, e, E)
    res = float(np.linalg.norm(tridiagonal_matvec(d, e, v) - E * v))
    return FDLevel(h=disc.h, L=disc.L, E=float(E), E2=float(E2), t=disc.nodes(),
                   vector=v / math.sqrt(disc.h), residual=res)


def richardson(coarse: float, fine: float) -> float:
    """Extrapolate an ``O(h^2)`` quantity from ``h`` and ``h/2``."""
    return (4.0 * fine - coarse) / 3.0


def _fd_pair(profile, disc, R=None):
    coarse = fd_solve(profile, disc, R=R)
    fine = fd_solve(profile, disc.refined(), R=R)
    if fine.E >= -NO_BOUND_TOL:
        raise NoBoundState(f"lowest eigenvalue {fine.E:.3e} is not negative")
    if abs(fine.E - coarse.E) > 0.1 * abs(coarse.E):
        raise DiscretizationTooCoarse(
            f"E changed from {coarse.E:.6g} to {fine.E:.6g} under refinement (h={disc.h})")
    return coarse, fine


# ---------------------------------------------------------------------------
# Ground states
# ---------------------------------------------------------------------------

class DeltaEigenfunction:
    """``sqrt(|alpha|/4) * exp(alpha |t| / 2)``.

    This amplitude is kept as the closed form; its squared L2 norm is 1/2.
    """

    def __init__(self, alpha: float):
        self.alpha = float(alpha)
        self.E = -0.25 * alpha * alpha
        self.k = 0.5 * abs(alpha)
        self.amplitude = math.sqrt(abs(alpha) / 4.0)
        self.support = 0.0
        self.N_plus = self.N_minus = self.amplitude
        self.norm_squared = self.amplitude ** 2 / self.k

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = self.amplitude * np.exp(0.5 * self.alpha * np.abs(t))
        return out if out.ndim else float(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = 0.5 * self.alpha * np.sign(t) * self.amplitude * np.exp(0.5 * self.alpha * np.abs(t))
        return out if out.ndim else float(out)


class ShootingEigenfunction:
    """Normalized positive solution of ``-y'' + W y = E y`` with exact tails.

    Outside the support the function is the decaying exponential.  For an
    even profile the interior is integrated from ``t = 0`` with ``y'(0) = 0``
    and mirrored, so the evaluator is exactly even; otherwise it is
    integrated from ``+support`` down to ``-support``.  With ``polish`` the
    energy is moved by a secant iteration to where the interior solution
    meets the exponential tail with matching slope.
    """

    def __init__(self, profile: _PiecewiseLinear, E: float, rtol: float = 1e-13,
                 polish: bool = True):
        if E >= 0:
            raise NoBoundState(f"energy {E} is not negative")
        self.support = a = profile.support
        cuts = profile.breakpoints()
        probe = np.concatenate([cuts, 0.5 * (cuts[1:] + cuts[:-1])])
        self.even = bool(np.array_equal(profile(probe), profile(-probe)))
        inner = cuts[(cuts > -a) & (cuts < a)]
        if self.even:
            self._cuts = np.unique(np.concatenate([inner[inner > 0], [0.0, a]]))
        else:
            self._cuts = np.unique(np.concatenate([inner, [-a, a]]))[::-1]
        self._profile = profile
        self._rtol = rtol
        self.E_input = float(E)
        shot = self._shoot(E)
        if polish:
            try:
                E_star = newton(lambda e: self._shoot(e)["mismatch"], float(E),
                                x1=float(E) * (1.0 + 1e-9), tol=1e-14 * abs(E), maxiter=20,
                                disp=False)
            except NoBoundState:  # pragma: no cover
                E_star = float(E)
            candidate = self._shoot(E_star)
            if abs(candidate["mismatch"]) < abs(shot["mismatch"]):
                shot = candidate
        self.E = shot["E"]
        self.k = k = shot["k"]
        self.matching_mismatch = shot["mismatch"]
        self._segments = shot["segments"]
        self._scale = 1.0 / math.sqrt(shot["norm2"])
        self.N_plus = shot["y_plus"] * math.exp(k * a) * self._scale
        self.N_minus = shot["y_minus"] * math.exp(k * a) * self._scale
        self.norm_squared = 1.0

    def _shoot(self, E):
        if E >= 0:
            raise NoBoundState(f"energy {E} is not negative")
        profile = self._profile
        k = math.sqrt(-E)
        a = self.support

        def rhs(t, z):
            return [z[1], (profile(t) - E) * z[0], z[0] * z[0]]

        if self.even:
            state, scale = [1.0, 0.0, 0.0], 1.0
        else:
            y0 = math.exp(-k * a)
            state, scale = [y0, -k * y0, 0.0], y0
        segments = []
        for start, stop in zip(self._cuts[:-1], self._cuts[1:]):
            sol = solve_ivp(rhs, (start, stop), state, method="DOP853", rtol=self._rtol,
                            atol=1e-14 * scale, dense_output=True)
            if not sol.success:  # pragma: no cover
                raise RuntimeError(sol.message)
            segments.append((min(start, stop), max(start, stop), sol.sol))
            state = sol.y[:, -1]
        y_end, dy_end, interior = state
        if self.even:
            return dict(E=float(E), k=k, segments=segments, y_plus=y_end, y_minus=y_end,
                        norm2=2.0 * interior + y_end * y_end / k, mismatch=dy_end / y_end + k)
        return dict(E=float(E), k=k, segments=segments, y_plus=y0, y_minus=y_end,
                    norm2=-interior + (y0 * y0 + y_end * y_end) / (2.0 * k),
                    mismatch=dy_end / y_end - k)

    def _eval(self, t, component):
        t = np.asarray(t, dtype=np.float64)
        out = np.empty(t.shape)
        k = self.k
        right = t >= self.support
        left = t <= -self.support
        sign = -1.0 if component else 1.0
        out[right] = (sign * k if component else 1.0) * self.N_plus * np.exp(-k * t[right])
        out[left] = (k if component else 1.0) * self.N_minus * np.exp(k * t[left])
        mid = ~(right | left)
        if np.any(mid):
            tm = t[mid]
            flip = np.ones(tm.shape)
            if self.even:
                if component:
                    flip = np.where(tm < 0, -1.0, 1.0)
                tm = np.abs(tm)
            vals = np.empty(tm.shape)
            for lo, hi, sol in self._segments:
                sel = (tm >= lo) & (tm <= hi)
                if np.any(sel):
                    vals[sel] = sol(tm[sel])[component]
            out[mid] = flip * vals * self._scale
        return out if out.ndim else float(out)

    def __call__(self, t):
        return self._eval(t, 0)

    def derivative(self, t):
        return self._eval(t, 1)


@dataclass
class TransverseGroundState:
    """Lowest eigenpair of ``T`` with tail amplitudes.

    ``norm_check`` is the computed squared L2 norm of ``xi1``.  ``levels``
    holds the two finite-difference solves behind ``E1`` (empty for the
    closed-form delta branch).
    """

    E1: float
    xi1: Callable
    N_plus: float
    N_minus: float
    norm_check: float
    profile: object = None
    levels: tuple = ()

    @property
    def decay(self) -> float:
        return math.sqrt(-self.E1)

    def derivative(self, t):
        return self.xi1.derivative(t)


def _norm_by_quadrature(xi, support, k):
    tail = (xi(support) ** 2 + xi(-support) ** 2) / (2.0 * k)
    if support == 0.0:
        return tail
    interior, _ = quad(lambda u: xi(u) ** 2, -support, support, epsabs=1e-14, epsrel=1e-13,
                       limit=200, points=[0.0])
    return interior + tail


def solve_ground_state(profile, disc: Optional[Discretization1D] = None) -> TransverseGroundState:
    """Ground state of ``T``; analytic for the delta, FD + Richardson otherwise."""
    if isinstance(profile, Delta):
        xi = DeltaEigenfunction(profile.alpha)
        return TransverseGroundState(E1=xi.E, xi1=xi, N_plus=xi.N_plus, N_minus=xi.N_minus,
                                     norm_check=_norm_by_quadrature(xi, 0.0, xi.k),
                                     profile=profile)
    if disc is None:
        disc = default_discretization(profile)
    coarse, fine = _fd_pair(profile, disc)
    E1 = richardson(coarse.E, fine.E)
    if E1 >= -NO_BOUND_TOL:
        raise NoBoundState(f"extrapolated eigenvalue {E1:.3e} is not negative")
    xi = ShootingEigenfunction(profile, E1)
    return TransverseGroundState(E1=E1, xi1=xi, N_plus=xi.N_plus, N_minus=xi.N_minus,
                                 norm_check=_norm_by_quadrature(xi, xi.support, xi.k),
                                 profile=profile, levels=(coarse, fine))


def tail_constants(gs: TransverseGroundState, a: float, rel_tol: float = 1e-4):
    """``N_+`` and ``N_-`` read off the eigenfunction at ``t = +-(a + 1)``.

    The estimate is repeated at ``a + 2``; disagreement beyond ``rel_tol``
    raises :class:`TailNotExponential`.
    """
    k = gs.decay
    est = []
    for ts in (a + 1.0, a + 2.0):
        est.append((gs.xi1(ts) * math.exp(k * ts), gs.xi1(-ts) * math.exp(k * ts)))
    for i in range(2):
        first, second = est[0][i], est[1][i]
        if abs(first - second) > rel_tol * abs(first):
            raise TailNotExponential(f"tail amplitude estimates {first:.10g} vs {second:.10g}")
    return est[0]


# ---------------------------------------------------------------------------
# Double well
# ---------------------------------------------------------------------------

@dataclass
class DoubleWellResult:
    E1R: float
    xi1R: Callable
    upper_bound: float
    levels: tuple = ()


def _aligned_step(R: float, h0: float) -> float:
    return R / math.ceil(R / h0 - 1e-12)


def solve_double_well(profile, R: float, disc: Optional[Discretization1D] = None,
                      gs: Optional[TransverseGroundState] = None) -> DoubleWellResult:
    """Lowest eigenpair of ``T_R`` by FD + Richardson, with the test-function bound."""
    if not R > profile.support:
        raise ValueError(f"need R > {profile.support}, got R={R}")
    if disc is None:
        disc = default_discretization(profile, h=_aligned_step(R, 1.0 / 64), R=R)
    coarse, fine = _fd_pair(profile, disc, R=R)
    E1R = richardson(coarse.E, fine.E)
    t, v = fine.t, fine.vector

    def xi1R(u):
        return np.interp(u, t, v, left=0.0, right=0.0)

    if gs is None:
        gs = solve_ground_state(profile)
    return DoubleWellResult(E1R=E1R, xi1R=xi1R, upper_bound=double_well_upper_bound(gs, R),
                            levels=(coarse, fine))


def _integral_from(gs: TransverseGroundState, lower: float) -> float:
    """``int_{lower}^{inf} xi1^2`` with exponential tails in closed form."""
    xi = gs.xi1
    k = gs.decay
    a = xi.support
    total = gs.N_plus ** 2 * math.exp(-2 * k * max(a, lower)) / (2 * k)
    if lower < -a:
        total += gs.N_minus ** 2 * (math.exp(-2 * k * a) - math.exp(2 * k * lower)) / (2 * k)
    lo, hi = max(lower, -a), a
    if hi > lo:
        interior, _ = quad(lambda u: xi(u) ** 2, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=200)
        total += interior
    return total


def double_well_boundary_term(gs: TransverseGroundState, R: float) -> float:
    """``-2 sqrt(-E1) N_-^2 exp(-2 sqrt(-E1) R)``."""
    k = gs.decay
    return -2.0 * k * gs.N_minus ** 2 * math.exp(-2.0 * k * R)


def double_well_upper_bound(gs: TransverseGroundState, R: float) -> float:
    """Rayleigh quotient of the mirrored, shifted ground state for ``T_R``."""
    a = gs.xi1.support
    if not R > a:
        raise ValueError(f"need R > {a}, got R={R}")
    norm2 = 2.0 * _integral_from(gs, -R)
    return gs.E1 + double_well_boundary_term(gs, R) / norm2


def mirrored_test_function(gs: TransverseGroundState, R: float) -> Callable:
    """``xi1(|t| - R)``: the shifted ground state reflected into both wells."""
    return lambda t: gs.xi1(np.abs(np.asarray(t, dtype=np.float64)) - R)


# ---------------------------------------------------------------------------
# Rayleigh quotient
# ---------------------------------------------------------------------------

def rayleigh_quotient_1d(profile, psi, disc: Discretization1D, R: Optional[float] = None) -> float:
    """Discrete ``Q[psi] / ||psi||^2`` on the grid of ``disc``.

    ``psi`` is a callable or an array of values at ``disc.nodes()``; it is
    taken to vanish at ``+-L``.  Kinetic energy uses forward differences,
    potential and norm use the trapezoid rule (nodes carry weight ``h``).
    With ``R`` the potential is that of ``T_R``.  For the delta the
    potential term is ``alpha * |psi(well)|^2``.
    """
    t = disc.nodes()
    h = disc.h
    v = psi(t) if callable(psi) else np.asarray(psi, dtype=np.float64)
    if v.shape != t.shape:
        raise ValueError(f"expected {t.size} samples, got {v.shape}")
    norm2 = float(np.sum(v * v) * h)
    if norm2 == 0.0:
        raise ZeroTestFunction("test function vanishes on the grid")
    padded = np.concatenate([[0.0], v, [0.0]])
    kinetic = float(np.sum(np.diff(padded) ** 2) / h)
    if isinstance(profile, Delta):
        potential = 0.0
        for pos in ((0.0,) if R is None else (R, -R)):
            j = int(round((pos + disc.L) / h)) - 1
            if abs(t[j] - pos) > 1e-9 * h:
                raise ValueError(f"no grid node at delta position {pos}")
            potential += profile.alpha * v[j] ** 2
    else:
        if R is None:
            W = profile.cell_average(t, h)
        else:
            W = profile.cell_average(t - R, h) + profile.cell_average(-t - R, h)
        potential = float(np.sum(W * v * v) * h)
    return (kinetic + potential) / norm2


def log_gap_slope(E1: float, E1R_values: Sequence[float], R_values: Sequence[float]) -> float:
    """Least-squares slope of ``log(E1 - E1R)`` against ``R``."""
    gaps = E1 - np.asarray(E1R_values, dtype=np.float64)
    if np.any(gaps <= 0):
        raise ValueError("double-well eigenvalues must lie below E1")
    slope, _ = np.polyfit(np.asarray(R_values, dtype=np.float64), np.log(gaps), 1)
    return float(slope)

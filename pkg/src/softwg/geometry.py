"""Planar geometry of a circular arc joined to two straight semi-lines.

The curve is parameterised by arc length ``s``.  For ``|s| < theta*R/2`` it
follows a circle of radius ``R`` centred at ``(0, R)``; outside it continues
along the two tangent half-lines.  ``theta = 0`` is the straight line
``y = 0`` and ``theta = pi`` a half-circle with two parallel legs.

Fermi (parallel) coordinates ``(s, t)`` place a point at ``Gamma(s) + t N(s)``
where ``N`` is the left-handed unit normal, which points towards the arc
centre.  The cut-locus is the vertical half-line ``{(0, y): y >= R}``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels


class PlanePoint(NamedTuple):
    x: float
    y: float


class FermiCoordinate(NamedTuple):
    s: float
    t: float


@dataclass(frozen=True)
class WaveguideGeometry:
    """Arc radius ``R``, bending angle ``theta`` and channel half-width ``a``."""

    R: float
    theta: float
    a: float

    def __post_init__(self):
        for name in ("R", "theta", "a"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.R <= 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if self.a <= 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if self.theta > 0 and self.a >= self.R:
            # a * sup|kappa| < 1 with sup|kappa| = 1/R
            raise ValueError(f"need a < R for a bent curve, got a={self.a}, R={self.R}")

    @property
    def half_arc(self) -> float:
        """Arc-length coordinate ``theta*R/2`` of the right junction."""
        return 0.5 * self.theta * self.R

    @property
    def is_straight(self) -> bool:
        return self.theta == 0.0

    def with_theta(self, theta: float) -> "WaveguideGeometry":
        return WaveguideGeometry(self.R, theta, self.a)


def curve_point(g: WaveguideGeometry, s: float) -> PlanePoint:
    tau = 0.5 * g.theta
    R = g.R
    if s <= -g.half_arc:
        u = s + g.half_arc
        return PlanePoint(u * math.cos(tau) - R * math.sin(tau),
                          -u * math.sin(tau) + R * (1.0 - math.cos(tau)))
    if s >= g.half_arc:
        u = s - g.half_arc
        return PlanePoint(u * math.cos(tau) + R * math.sin(tau),
                          u * math.sin(tau) + R * (1.0 - math.cos(tau)))
    return PlanePoint(R * math.sin(s / R), R * (1.0 - math.cos(s / R)))


def tangent(g: WaveguideGeometry, s: float) -> tuple[float, float]:
    tau = 0.5 * g.theta
    if s <= -g.half_arc:
        return (math.cos(tau), -math.sin(tau))
    if s >= g.half_arc:
        return (math.cos(tau), math.sin(tau))
    return (math.cos(s / g.R), math.sin(s / g.R))


def normal(g: WaveguideGeometry, s: float) -> tuple[float, float]:
    tx, ty = tangent(g, s)
    return (-ty, tx)


def curvature(g: WaveguideGeometry, s: float) -> float:
    """``1/R`` strictly inside the arc, zero elsewhere (junctions included)."""
    return 1.0 / g.R if -g.half_arc < s < g.half_arc else 0.0


def fermi_map(g: WaveguideGeometry, c: FermiCoordinate) -> PlanePoint:
    px, py = curve_point(g, c.s)
    nx, ny = normal(g, c.s)
    return PlanePoint(px + c.t * nx, py + c.t * ny)


def jacobian(g: WaveguideGeometry, c: FermiCoordinate) -> float:
    return 1.0 - curvature(g, c.s) * c.t


def cut_radius_plus(g: WaveguideGeometry, s: float) -> float:
    """Largest ``t >= 0`` for which ``t -> Phi(s, t)`` stays distance-minimizing.

    Returns ``math.inf`` for the straight line.
    """
    if g.theta == 0.0:
        return math.inf
    if g.theta == math.pi:
        return g.R
    if -g.half_arc < s < g.half_arc:
        return g.R
    tan_tau = math.tan(0.5 * g.theta)
    return (abs(s) + g.R * (tan_tau - 0.5 * g.theta)) / tan_tau


def cut_radius_minus(g: WaveguideGeometry, s: float) -> float:
    return math.inf


def on_cut_locus(g: WaveguideGeometry, p: PlanePoint, tol: float = 1e-12) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if g.theta == 0.0:
        return False
    return abs(p.x) <= tol and p.y >= g.R - tol


def inverse_fermi(g: WaveguideGeometry, p: PlanePoint) -> Optional[FermiCoordinate]:
    """The unique ``(s, t)`` in the coordinate domain mapped to ``p``.

    The foot point is on the arc when ``p`` lies in the angular sector spanned
    by the arc about its centre, and on the nearer semi-line otherwise.
    Returns ``None`` for points on the cut-locus.
    """
    s, t, ok = _kernels.fermi_inverse(g.R, g.theta, p.x, p.y)
    if not ok[0]:
        return None
    return FermiCoordinate(float(s[0]), float(t[0]))


def inverse_fermi_arrays(g: WaveguideGeometry, x, y):
    """Vectorized :func:`inverse_fermi`; ``s`` and ``t`` are NaN where ``ok`` is false."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    shape = np.broadcast(x, y).shape
    xb, yb = np.broadcast_arrays(x, y)
    s, t, ok = _kernels.fermi_inverse(g.R, g.theta, xb.ravel(), yb.ravel())
    return s.reshape(shape), t.reshape(shape), ok.reshape(shape)


def curve_points(g: WaveguideGeometry, s) -> np.ndarray:
    """``Gamma(s)`` for an array of parameters, shape ``(..., 2)``."""
    s = np.asarray(s, dtype=np.float64)
    tau = 0.5 * g.theta
    R = g.R
    left = s <= -g.half_arc
    right = s >= g.half_arc
    u_left = s + g.half_arc
    u_right = s - g.half_arc
    x = np.where(left, u_left * math.cos(tau) - R * math.sin(tau),
                 np.where(right, u_right * math.cos(tau) + R * math.sin(tau), R * np.sin(s / R)))
    y = np.where(left, -u_left * math.sin(tau) + R * (1 - math.cos(tau)),
                 np.where(right, u_right * math.sin(tau) + R * (1 - math.cos(tau)),
                          R * (1 - np.cos(s / R))))
    return np.stack([x, y], axis=-1)

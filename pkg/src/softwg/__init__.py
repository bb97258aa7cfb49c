"""Spectral computations for soft and leaky waveguides along a bent curve.

The curve is a circular arc of radius ``R`` and opening angle ``theta``
continued by its two tangent half-lines.  Subpackages:

``geometry``       curve, frame, Fermi coordinates, cut-radius and cut-locus
``transverse``     1D ground states of ``-d^2/dt^2 + W`` and the double well
``variational``    test-function estimates of the shifted form
``hamiltonian2d``  finite-difference 2D Hamiltonian and its discrete spectrum
``eigensolve``     Lanczos / shift-invert eigensolver and a Jacobi oracle
``cli``            batch front end
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CertificateNotFound,
    DiscretizationTooCoarse,
    DivergentExt,
    GridTooCoarse,
    MollifierTooNarrow,
    NoBoundState,
    NotConverged,
    QuadratureNotConverged,
    SoftwgError,
    TailNotExponential,
    ZeroTestFunction,
)
from .geometry import FermiCoordinate, PlanePoint, WaveguideGeometry  # noqa: E402
from .transverse import Delta, SquareWell, Tabulated, solve_ground_state  # noqa: E402

__all__ = [
    "__version__",
    "WaveguideGeometry", "PlanePoint", "FermiCoordinate",
    "Delta", "SquareWell", "Tabulated", "solve_ground_state",
    "SoftwgError", "NoBoundState", "DiscretizationTooCoarse", "TailNotExponential",
    "ZeroTestFunction", "MollifierTooNarrow", "DivergentExt", "QuadratureNotConverged",
    "CertificateNotFound", "GridTooCoarse", "NotConverged",
]

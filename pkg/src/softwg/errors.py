"""Exception types raised by the solvers."""


class SoftwgError(Exception):
    """Base class for all package errors."""


class NoBoundState(SoftwgError):
    """The transverse operator has no negative eigenvalue."""


class DiscretizationTooCoarse(SoftwgError):
    """Halving the grid spacing moved an eigenvalue by more than 10%."""


class TailNotExponential(SoftwgError):
    """Tail amplitude estimates at two distances disagree."""


class ZeroTestFunction(SoftwgError):
    """A Rayleigh quotient was requested for the zero function."""


class MollifierTooNarrow(SoftwgError):
    """The mollifier plateau does not cover the curved part of the curve."""


class DivergentExt(SoftwgError):
    """The exterior boundary term has no finite limit (theta = pi)."""


class QuadratureNotConverged(SoftwgError):
    """Doubling the quadrature nodes changed the result beyond tolerance."""


class CertificateNotFound(SoftwgError):
    """No mollifier index with a negative shifted form was found."""


class GridTooCoarse(SoftwgError):
    """The regularization width of a delta profile is below two grid steps."""


class NotConverged(SoftwgError):
    """An iterative eigensolver or refinement study did not converge.

    ``values`` and ``residuals`` hold the best estimates available when the
    iteration stopped.
    """

    def __init__(self, message, iterations=0, values=None, residuals=None):
        super().__init__(message)
        self.iterations = iterations
        self.values = values
        self.residuals = residuals

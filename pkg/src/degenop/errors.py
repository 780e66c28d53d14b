"""Exception types shared across the package.

The CLI maps each of these onto a stable exit code (see ``cli.EXIT_CODES``).
"""


class DegenopError(Exception):
    """Base class for all package errors."""


class DivergenceError(DegenopError):
    """A 1/a-weighted integral does not converge (or overflowed).

    ``pair`` names the offending basis pair when raised from assembly.
    """

    def __init__(self, message, *, pair=None, ratio=None):
        super().__init__(message)
        self.pair = pair
        self.ratio = ratio


class InconclusiveError(DegenopError):
    """Refinement neither stabilised nor exceeded the divergence threshold."""


class IntegrationError(DegenopError):
    """The integrand returned a non-finite value at a quadrature node."""

    def __init__(self, message, *, node=None):
        super().__init__(message)
        self.node = node


class NumericalError(DegenopError):
    """A factorisation or linear solve failed."""

    def __init__(self, message, *, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue

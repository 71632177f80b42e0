class PathHedgeError(Exception):
    """Base class for errors raised by this package."""


class PartitionMismatch(PathHedgeError, ValueError):
    """A partition time is not a sampling time of the path (no interpolation)."""


class LengthGuardError(PathHedgeError, ValueError):
    """An input exceeds a size guard (memory or O(n^2) cost)."""


class EmbeddingError(PathHedgeError, ArithmeticError):
    """Circulant embedding produced negative eigenvalues and no fallback applies."""


class QuadratureError(PathHedgeError, ArithmeticError):
    """Node-doubling check of a quadrature rule disagreed beyond tolerance."""


class NearExpiryDegeneracy(PathHedgeError, ArithmeticError):
    """The gamma of the hedge option is below the floor; weights are unbounded.

    ``index`` is the rebalance index at which the solve failed, when known.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class QVMismatchWarning(UserWarning):
    """Delta-only Asian hedging requested on a path whose realised QV
    does not match the pricing volatility."""

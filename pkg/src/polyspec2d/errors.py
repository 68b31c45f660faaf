"""Exception hierarchy shared by all modules."""


class PolyspecError(Exception):
    """Base class."""


class InvalidInputError(PolyspecError, ValueError):
    pass


class UnsupportedOrderError(PolyspecError, ValueError):
    pass


class DegenerateGeometryError(PolyspecError, ValueError):
    """Collinear configuration: a boundary of the admissible domain."""


class NotATriangleError(PolyspecError, ValueError):
    """Side lengths violate the triangle inequality strictly."""


class IncompatibleQuadrilateralError(PolyspecError, ValueError):
    pass


class IncompatibleMultilateralError(PolyspecError, ValueError):
    pass


class OracleUnreliableError(PolyspecError, ArithmeticError):
    """The regularised oscillatory quadrature failed to settle."""

    def __init__(self, message, estimates=(), extrapolants=()):
        super().__init__(message)
        self.estimates = list(estimates)
        self.extrapolants = list(extrapolants)


class TruncationError(PolyspecError, ValueError):
    """Sampled function has not decayed at the end of its grid."""


class ResourceCapError(PolyspecError, RuntimeError):
    pass


class AliasingError(PolyspecError, ValueError):
    pass


class InvalidConfigError(PolyspecError, ValueError):
    pass

"""Exception hierarchy shared across the package."""


class BoasBuckError(Exception):
    """Base class for every error raised by this package."""


class OrderMismatchError(BoasBuckError, ValueError):
    pass


class CompositionDomainError(BoasBuckError, ValueError):
    pass


class PositivityViolationError(BoasBuckError, ArithmeticError):
    pass


class TruncationFailureError(BoasBuckError, ArithmeticError):
    pass


class PoleError(BoasBuckError, ValueError):
    pass


class DivergentMomentError(BoasBuckError, ValueError):
    pass


class QuadratureFailureError(BoasBuckError, ArithmeticError):
    pass


class DegenerateNormalizerError(BoasBuckError, ArithmeticError):
    pass


class LimitEstimateError(BoasBuckError, ArithmeticError):
    pass

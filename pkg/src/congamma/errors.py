"""Exception types shared across the package."""


class CongammaError(Exception):
    """Base class; ``param`` names the offending input when one is known."""

    def __init__(self, message, param=None):
        super().__init__(message)
        self.param = param


class DomainError(CongammaError, ValueError):
    pass


class RangeError(CongammaError, ValueError):
    """A query outside the range a prime table was built for."""


class ResourceError(CongammaError):
    """A request above a configured size ceiling."""


class PrecisionExhausted(CongammaError, ArithmeticError):
    """Cancellation needs more working digits than the policy allows.

    ``required`` is the working precision the computation asked for and
    ``suggested_digits`` a ``digits`` setting whose headroom covers it.
    """

    def __init__(self, message, required, suggested_digits, param="digits"):
        super().__init__(message, param)
        self.required = required
        self.suggested_digits = suggested_digits


class ConvergenceError(CongammaError, ArithmeticError):
    pass


class CacheCorruption(CongammaError):
    def __init__(self, message, line=None):
        super().__init__(message, "cache")
        self.line = line

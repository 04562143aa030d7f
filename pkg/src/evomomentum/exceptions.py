"""Exception types raised by the simulation library."""


class EvoMomentumError(Exception):
    """Base class for all library errors."""


class NearZeroMeanFitness(EvoMomentumError, ArithmeticError):
    """A normalized field was requested where the mean fitness vanishes.

    Zero-sum (skew-symmetric) landscapes always trigger this; use the
    unnormalized field for them.
    """


class StateLeftSimplex(EvoMomentumError):
    """A discrete step produced a negative coordinate.

    The offending vector is kept on ``state`` so callers can record it.
    """

    def __init__(self, message, state=None, momentum=None):
        super().__init__(message)
        self.state = state
        self.momentum = momentum


class BetaSingularity(EvoMomentumError, ValueError):
    """The momentum coefficient is (numerically) equal to 1."""


class SupportViolation(EvoMomentumError, ValueError):
    """The KL divergence is infinite: the reference puts mass where x has none."""


class NonpositiveArgument(EvoMomentumError, ValueError):
    """The argument of a logarithm is not positive."""


class DimensionError(EvoMomentumError, ValueError):
    """Operands have incompatible dimensions."""


class DidNotConverge(EvoMomentumError):
    """A run ended without reaching the convergence threshold."""

    def __init__(self, message, status=None, beta=None):
        super().__init__(message)
        self.status = status
        self.beta = beta


class ValidationError(EvoMomentumError, ValueError):
    """A configuration field failed validation."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ParseError(EvoMomentumError, ValueError):
    """A configuration file is syntactically malformed."""

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line

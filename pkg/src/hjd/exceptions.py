"""Exception hierarchy shared across the package."""


class HJDError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(HJDError, ValueError):
    """Malformed formula text. ``offset`` is the byte offset of the offending token."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvaluationError(HJDError, ArithmeticError):
    """Domain error while evaluating a formula (sqrt of a negative, 1/0, overflow)."""


class ParameterError(HJDError, ValueError):
    pass


class StationarityError(ParameterError):
    def __init__(self, radius):
        super().__init__(f"spectral radius of C/alpha is {radius:.6g} >= 1")
        self.radius = radius


class RankDeficientError(HJDError, ArithmeticError):
    def __init__(self, dim, rank):
        super().__init__(f"design matrix for dimension {dim} has rank {rank}")
        self.dim = dim
        self.rank = rank


class SimulationError(HJDError, ArithmeticError):
    """Non-finite or exploding state during path simulation."""

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class ConfigError(HJDError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key

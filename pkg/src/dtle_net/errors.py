"""Exception hierarchy for dtle_net."""


class DTLENetError(Exception):
    """Base class for all package errors."""


class DimensionError(DTLENetError, ValueError):
    pass


class NonFiniteError(DTLENetError, ValueError):
    pass


class SingularMatrixError(DTLENetError, ArithmeticError):
    def __init__(self, message, column=None, pivot=None):
        super().__init__(message)
        self.column = column
        self.pivot = pivot


class NotSymmetricError(DTLENetError, ValueError):
    pass


class PartitionError(DTLENetError, ValueError):
    pass


class ParameterError(DTLENetError, ValueError):
    pass


class GraphError(DTLENetError, ValueError):
    pass


class ScheduleError(DTLENetError, ValueError):
    pass


class DivergenceError(DTLENetError, ArithmeticError):
    """Raised when an iterate becomes non-finite.

    Carries the round at which the blow-up was detected and the partial
    trajectory recorded up to that point.
    """

    def __init__(self, round_, trajectory=None):
        super().__init__(
            f"non-finite iterate at round {round_}; step sizes likely violate "
            "the admissible bound alpha_i < min(1, 1/xi_i)"
        )
        self.round = round_
        self.trajectory = trajectory


class EstimationError(DTLENetError, ValueError):
    pass


class NoUniqueSolutionError(DTLENetError, ArithmeticError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class InvalidReferenceError(DTLENetError, ValueError):
    pass


class ConfigError(DTLENetError, ValueError):
    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line

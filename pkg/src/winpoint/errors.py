"""Exception hierarchy shared by all modules."""


class WinpointError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(WinpointError, ValueError):
    pass


class ShapeError(WinpointError, ValueError):
    pass


class SingularMatrixError(WinpointError, ArithmeticError):
    pass


class DuplicatePointError(WinpointError, ValueError):
    pass


class InvalidConfigurationError(WinpointError, ValueError):
    pass


class RangeError(WinpointError, OverflowError):
    pass


class ResourceLimitError(WinpointError):
    pass


class NoFeasibleBaselineError(WinpointError):
    pass


class DiscoveryError(WinpointError):
    """Search finished without a valid configuration.

    ``best_candidate`` holds the best (invalid) point list seen, if any.
    """

    def __init__(self, message, best_candidate=None):
        super().__init__(message)
        self.best_candidate = best_candidate

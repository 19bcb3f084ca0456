class NashfitError(Exception):
    """Base class for all Nashfit exceptions."""

    def __init__(self, message, code=None):
        super().__init__(message)
        self.code = code


class ConfigError(NashfitError):
    """Raised when a game file or run configuration cannot be loaded or validated."""

    pass


class InputError(NashfitError, FileNotFoundError):
    """Raised when a required input (game file, CSV, prior report) is missing or malformed."""

    def __init__(self, message, code=2):
        super().__init__(message, code=code)


class DomainError(NashfitError, ValueError):
    """Raised when a basis function is evaluated outside its domain."""

    pass


class DimensionError(NashfitError, ValueError):
    """Raised when vector or matrix shapes do not agree."""

    pass


class NumericalError(NashfitError, ArithmeticError):
    """Raised when a computation produces non-finite values."""

    pass


class InfeasibleError(NashfitError):
    """Raised when a constraint set or coefficient feasible set is empty."""

    pass


class EstimationError(NashfitError):
    """Raised when an estimator cannot be formed (no data, no members)."""

    pass


class SimulationError(NashfitError):
    """Raised when synthetic data generation fails on a game instance."""

    def __init__(self, message, code=None, instance=None):
        super().__init__(message, code=code)
        self.instance = instance or {}

"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configuration files."""


class UnsupportedOperation(RuntimeError):
    """An optional capability (e.g. a convex conjugate) is not available."""


class NumericsError(ArithmeticError):
    """A numerical evaluation produced non-finite values or an impossible state."""


class StagnationError(NumericsError):
    """Backtracking shrank the stepsize below any useful magnitude."""


class NotConvergedError(RuntimeError):
    """An iterative solver hit its iteration budget; carries the best iterate found.

    Attributes
    ----------
    result : object
        The solver result at abort time (best iterate, gap, iteration count).
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result

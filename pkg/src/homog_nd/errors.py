"""Exception types raised by the solvers."""


class SolverError(RuntimeError):
    """An iterative or direct solve failed; ``residual`` is the best value reached."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class CompatibilityError(ValueError):
    """A singular periodic problem was handed a right-hand side outside its range."""

"""Exception types raised by the solvers and the experiment driver."""


class SolverError(RuntimeError):
    """Base class for failures inside a time-stepping run.

    ``context`` carries machine-readable details (time level, iteration
    index, phase) that the CLI serialises on failure.
    """

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = dict(context)

    def with_context(self, **extra):
        self.context.update({k: v for k, v in extra.items() if k not in self.context})
        return self


class SingularMatrix(SolverError, ArithmeticError):
    """A zero pivot survived elimination."""


class NonConvergence(SolverError):
    """Fixed-point iteration hit ``max_iter`` with the update above ``tol``."""

    def __init__(self, message, change, iterations, **context):
        super().__init__(message, change=change, iterations=iterations, **context)
        self.change = change
        self.iterations = iterations


class Diverged(SolverError):
    """The max-norm of the solution exceeded the divergence guard."""


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""

"""Exception types raised across the package."""


class HeavyTrafficError(Exception):
    """Base class for all library errors."""


class ConfigError(HeavyTrafficError, ValueError):
    """Invalid parameters or configuration file contents."""


class QuadratureError(HeavyTrafficError, RuntimeError):
    """Numerical integration failed to reach the requested tolerance."""


class BracketError(HeavyTrafficError, RuntimeError):
    """A root/crossing could not be bracketed in the admissible range."""


class BudgetExceeded(HeavyTrafficError, RuntimeError):
    """A Monte Carlo request would exceed the configured step budget."""

    def __init__(self, steps, budget, hint=""):
        self.steps = steps
        self.budget = budget
        msg = f"request needs {steps:.3g} jump evaluations, budget is {budget:.3g}"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)


class AccuracyError(HeavyTrafficError, RuntimeError):
    """A special-function evaluation could not meet its accuracy target."""

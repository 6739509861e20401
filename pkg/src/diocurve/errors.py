class DiocurveError(Exception):
    """Base class for library errors."""


class DomainError(DiocurveError, ValueError):
    """A point or interval lies outside the curve's domain."""


class InvalidFormError(DiocurveError, ValueError):
    """Bad integer form: all-zero coefficients, wrong length, or non-positive height."""


class NormalizationError(DiocurveError, ValueError):
    """The first coordinate is not the identity and cannot be re-parameterized."""


class DerivativeMismatchError(DiocurveError, ValueError):
    """Supplied derivatives disagree with finite differences."""


class DegenerateCurveError(DiocurveError, ValueError):
    """A curvature or Wronskian lower bound failed on the certification grid."""


class BudgetError(DiocurveError):
    """A request would examine more integer forms than the budget allows."""

    def __init__(self, requested: int, budget: int, what: str = "forms"):
        self.requested = int(requested)
        self.budget = int(budget)
        super().__init__(f"request needs {self.requested} {what}, budget is {self.budget}")


class ConfigError(DiocurveError, ValueError):
    """Invalid experiment configuration."""


class ConstructionError(DiocurveError):
    """A step of the nearby-root construction could not be completed."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


class BoxTooSmallError(DiocurveError, ValueError):
    """The search box holds fewer than three non-collinear lattice points of the plane."""

"""
Exception hierarchy shared by every solver and by the command line.
"""
from typing import Any, Optional, Sequence


class SingularLabError(Exception):
    """Base class for all laboratory errors."""


class ParameterError(SingularLabError, ValueError):
    """Invalid numeric parameter (ellipticity ordering, exponents, windows)."""


class ConfigError(SingularLabError):
    """Unreadable or inconsistent run configuration."""


class SingularityError(SingularLabError):
    """A profile is nonpositive where u^{-gamma} must be evaluated."""

    def __init__(self, node: int, value: float):
        self.node = node
        self.value = value
        super().__init__(f"nonpositive interior value {value:.3e} at node {node}")


class NonConvergenceError(SingularLabError):
    """An iterative procedure ran out of iterations or stagnated."""

    def __init__(self, message: str, last_residual: Optional[float] = None,
                 history: Optional[Sequence[float]] = None):
        self.last_residual = last_residual
        self.history = list(history) if history is not None else []
        if last_residual is not None:
            message = f"{message} (last residual {last_residual:.3e})"
        super().__init__(message)


class ContractionViolationError(SingularLabError):
    """A fixed-point iterate left the trial ball {|v-1| < 1/2}."""


class MonotonicityViolationError(SingularLabError):
    """A radial profile stopped decreasing before reaching zero."""


class SandwichViolationError(SingularLabError):
    """The Pucci profiles cross each other beyond tolerance."""


class HopfFailureError(SingularLabError):
    """A barrier constant that must be positive came out nonpositive."""


class PositivityError(SingularLabError):
    """An iterate lost interior positivity."""

    def __init__(self, node: int, value: float):
        self.node = node
        self.value = value
        super().__init__(f"iterate lost positivity at node {node} (value {value:.3e})")


class SchemeError(SingularLabError):
    """Monotone iteration violated ordering or barrier confinement."""

    def __init__(self, message: str, node: int, iteration: int, delta: Optional[float] = None):
        self.node = node
        self.iteration = iteration
        self.delta = delta
        super().__init__(f"{message} at node {node}, iteration {iteration}"
                         + (f", delta={delta:.3e}" if delta is not None else ""))


class InsufficientDataError(SingularLabError):
    """Too few nodes inside a fitting window."""


class RegimeError(SingularLabError):
    """A check was requested outside the exponent regime where it applies."""


class PreconditionError(SingularLabError):
    """Inputs of a verification check are not certified."""


class HypothesisViolationError(SingularLabError):
    """The existence theorem's eigenvalue hypothesis fails."""

    def __init__(self, message: str, values: Optional[dict[str, Any]] = None):
        self.values = values or {}
        super().__init__(message)


class SolverFailureError(SingularLabError):
    """Unexpected numerical failure raised by a library routine inside a solver."""

"""Exception hierarchy for g2flow."""

from typing import Any, List, Optional, Sequence, Tuple


class G2FlowError(Exception):
    """Base class for every error raised by g2flow."""


class ConfigError(G2FlowError, ValueError):
    """Malformed configuration file, override or environment value."""


class NumericalError(G2FlowError):
    """A computation could not produce a trustworthy result."""


class InvalidSystem(NumericalError):
    """A singular system violates the solvability conditions at t = 0."""

    def __init__(self, message: str, residual: Optional[float] = None,
                 eigenvalues: Optional[Sequence[complex]] = None):
        super().__init__(message)
        self.residual = residual
        self.eigenvalues = list(eigenvalues) if eigenvalues is not None else None


class StepUnderflow(NumericalError):
    """The adaptive step size collapsed before reaching the end time."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class DegenerateSeed(NumericalError):
    """A series seed produced a non-positive square-root argument."""

    def __init__(self, message: str, eps: float):
        super().__init__(message)
        self.eps = eps


class IncompleteMetric(NumericalError):
    """A metric trajectory left the region where the family inequalities hold."""

    def __init__(self, message: str, time: float, margins: Optional[dict] = None):
        super().__init__(message)
        self.time = time
        self.margins = margins or {}


class FitUnstable(NumericalError):
    """An asymptotic fit did not converge to the requested accuracy."""

    def __init__(self, message: str, fit_err: Optional[float] = None):
        super().__init__(message)
        self.fit_err = fit_err


class FormMismatch(NumericalError):
    """Two algebraically equal expressions disagree numerically."""

    def __init__(self, message: str, values: Tuple[float, float]):
        super().__init__(message)
        self.values = values


class UndecidedVerdict(NumericalError):
    """The integration window is too short to separate the verdicts."""

    def __init__(self, message: str, t_max: float, uncertainty: Optional[float] = None):
        super().__init__(message)
        self.t_max = t_max
        self.uncertainty = uncertainty


class ViolatedAsymptotic(NumericalError):
    """Tail samples do not follow the expected asymptotic law."""

    def __init__(self, message: str, samples: Optional[List[Any]] = None):
        super().__init__(message)
        self.samples = samples or []


class InvalidEnd(NumericalError):
    """End conditions outside the admissible range."""


class FailedToClose(NumericalError):
    """A backward-shot trajectory does not extend smoothly over t = 0."""

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class BadBracket(NumericalError):
    """Both bisection endpoints classify identically."""

    def __init__(self, message: str, bracket: Tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


class HypothesisNotMet(NumericalError):
    """Two trajectories are not strictly ordered at the comparison start."""


class ConstraintViolation(NumericalError):
    """Parameters outside the region where the closed forms are real."""


class DomainError(NumericalError, ValueError):
    """Argument outside the domain of a closed-form expression."""

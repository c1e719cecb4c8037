"""Integration machinery shared by every g2flow module."""

from .errors import (
    BadBracket,
    ConfigError,
    ConstraintViolation,
    DegenerateSeed,
    DomainError,
    FailedToClose,
    FitUnstable,
    FormMismatch,
    G2FlowError,
    HypothesisNotMet,
    IncompleteMetric,
    InvalidEnd,
    InvalidSystem,
    NumericalError,
    StepUnderflow,
    UndecidedVerdict,
    ViolatedAsymptotic,
)
from .integrator import (
    Termination,
    TerminationKind,
    Trajectory,
    integrate_adaptive,
    sample_grid,
    terminal_event,
)
from .singular import SingularSystem, solve_singular_ivp, taylor_seed

__all__ = [
    "BadBracket",
    "ConfigError",
    "ConstraintViolation",
    "DegenerateSeed",
    "DomainError",
    "FailedToClose",
    "FitUnstable",
    "FormMismatch",
    "G2FlowError",
    "HypothesisNotMet",
    "IncompleteMetric",
    "InvalidEnd",
    "InvalidSystem",
    "NumericalError",
    "StepUnderflow",
    "UndecidedVerdict",
    "ViolatedAsymptotic",
    "SingularSystem",
    "Termination",
    "TerminationKind",
    "Trajectory",
    "integrate_adaptive",
    "sample_grid",
    "solve_singular_ivp",
    "taylor_seed",
    "terminal_event",
]

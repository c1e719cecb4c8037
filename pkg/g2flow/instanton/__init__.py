"""Reduced G2-instantons on B7 metrics."""

from .flow import (
    COINTEGRATED,
    INTERPOLATED,
    abelian_residual,
    abelian_solution,
    flow_full_instanton,
    flow_instanton,
    full_system_coefficients,
    instanton_kappas,
    integrate_FG,
    seed_instanton,
)
from .models import (
    FullInstantonTrajectory,
    InstantonInit,
    InstantonTrajectory,
    Verdict,
    VerdictKind,
)
from .verdict import (
    RemainderReport,
    boundary_tolerance,
    check_comparison,
    check_g_remainder,
    check_monotone_flux,
    check_negative_trap,
    check_sign_persistence,
    classify_trajectory,
    decay_rate_fit,
    flux_bound,
    lambda_prefactor,
)

__all__ = [
    "COINTEGRATED",
    "INTERPOLATED",
    "abelian_residual",
    "abelian_solution",
    "flow_full_instanton",
    "flow_instanton",
    "full_system_coefficients",
    "instanton_kappas",
    "integrate_FG",
    "seed_instanton",
    "FullInstantonTrajectory",
    "InstantonInit",
    "InstantonTrajectory",
    "Verdict",
    "VerdictKind",
    "RemainderReport",
    "boundary_tolerance",
    "check_comparison",
    "check_g_remainder",
    "check_monotone_flux",
    "check_negative_trap",
    "check_sign_persistence",
    "classify_trajectory",
    "decay_rate_fit",
    "flux_bound",
    "lambda_prefactor",
]

"""B7 metrics: family data, conversions and flows."""

from .b7 import (
    B7Params,
    FamilyKind,
    MetricSample,
    ab_from_metric,
    ab_rhs,
    eval_H,
    eval_H_ab,
    eval_H_coefficients,
    eval_H_hat,
    hitchin_rhs,
    instanton_coefficients,
    metric_from_ab,
    normal_form_rhs,
    seed_metric,
)
from .flow import (
    AsymptoticReport,
    InequalityReport,
    MetricInterpolant,
    MetricTrajectory,
    asymptotic_remainders,
    check_inequalities,
    estimate_ell,
    estimate_ell_cubic,
    extend_metric,
    flow_metric,
    flow_metric_ABform,
    flow_metric_rescaled,
    member_with_ell,
    metric_grid,
    rescale_trajectory,
)

__all__ = [
    "B7Params",
    "FamilyKind",
    "MetricSample",
    "ab_from_metric",
    "ab_rhs",
    "eval_H",
    "eval_H_ab",
    "eval_H_coefficients",
    "eval_H_hat",
    "hitchin_rhs",
    "instanton_coefficients",
    "metric_from_ab",
    "normal_form_rhs",
    "seed_metric",
    "AsymptoticReport",
    "InequalityReport",
    "MetricInterpolant",
    "MetricTrajectory",
    "asymptotic_remainders",
    "check_inequalities",
    "estimate_ell",
    "estimate_ell_cubic",
    "extend_metric",
    "flow_metric",
    "flow_metric_ABform",
    "flow_metric_rescaled",
    "member_with_ell",
    "metric_grid",
    "rescale_trajectory",
]

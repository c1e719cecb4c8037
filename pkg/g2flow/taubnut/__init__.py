"""Taub-NUT, its ASD instantons and the collapsed limit of the ALC family."""

from .adiabatic import (
    AdiabaticRow,
    AdiabaticTable,
    AsdSolution,
    adiabatic_instanton_compare,
    closed_form_along,
    integrate_asd,
    linearisation_eigenvalues,
    params_for_taub_nut,
    rescaled_b7_flow,
    taub_nut_flow,
)
from .closed_form import (
    AsdFamily,
    AsdParams,
    ClosedFormRow,
    ResidualCase,
    TaubNutParams,
    asd_charge,
    asd_derivatives,
    asd_eval,
    asd_residual,
    cd_from_mu,
    conserved_quantity,
    deta_dt,
    mu_from_cd,
    random_residual_suite,
    sample_closed_form,
    tn_eta_at,
    tn_metric,
    tn_series,
    tn_time,
)

__all__ = [
    "AdiabaticRow",
    "AdiabaticTable",
    "AsdFamily",
    "AsdParams",
    "AsdSolution",
    "ClosedFormRow",
    "ResidualCase",
    "TaubNutParams",
    "adiabatic_instanton_compare",
    "asd_charge",
    "asd_derivatives",
    "asd_eval",
    "asd_residual",
    "cd_from_mu",
    "closed_form_along",
    "conserved_quantity",
    "deta_dt",
    "integrate_asd",
    "linearisation_eigenvalues",
    "mu_from_cd",
    "random_residual_suite",
    "params_for_taub_nut",
    "rescaled_b7_flow",
    "sample_closed_form",
    "taub_nut_flow",
    "tn_eta_at",
    "tn_metric",
    "tn_series",
    "tn_time",
]

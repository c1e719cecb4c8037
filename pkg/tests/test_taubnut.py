"""Tests for Taub-NUT, its ASD instantons and the collapsed limit."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from g2flow.core.errors import ConstraintViolation, DomainError
from g2flow.core.singular import SingularSystem
from g2flow.metric.b7 import normal_form_fixed_point, normal_form_rhs
from g2flow.taubnut.adiabatic import (
    adiabatic_instanton_compare,
    integrate_asd,
    linearisation_eigenvalues,
    params_for_taub_nut,
    rescaled_b7_flow,
)
from g2flow.taubnut.closed_form import (
    AsdFamily,
    AsdParams,
    TaubNutParams,
    asd_charge,
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

REFERENCE_MU = (0.0689301, 0.5093286)


def test_taub_nut_values():
    f1, f3, t = tn_metric(TaubNutParams(m=1.0), 2.0)
    assert f1 == pytest.approx(1.4142136, abs=1e-7)
    assert f3 == pytest.approx(0.7071068, abs=1e-7)
    assert t > 0.0


def test_taub_nut_domain():
    with pytest.raises(DomainError):
        tn_metric(TaubNutParams(m=1.0), 1.0)
    with pytest.raises(DomainError):
        asd_eval(AsdParams.two_parameter(1.0, 1.0), 2.0, 0.2)


def test_circle_radius_at_infinity():
    _, f3, t = tn_metric(TaubNutParams(m=2.0), 0.25 * (1.0 + 1e-10))
    assert f3 == pytest.approx(2.0, rel=1e-9)
    assert t > 1e4


def test_scaling_of_params():
    assert TaubNutParams(m=1.5).scaled(2.0).m == pytest.approx(3.0)


@pytest.mark.parametrize("eta", [1.5, 3.0, 40.0, 1e4])
def test_time_closed_form_matches_quadrature(eta):
    assert tn_time(1.0, eta) == pytest.approx(tn_time(1.0, eta, method="quad"), rel=1e-9)


@pytest.mark.parametrize("t", [0.01, 0.7, 5.0, 60.0])
def test_eta_inversion(t):
    eta = tn_eta_at(1.3, t)
    assert tn_time(1.3, eta) == pytest.approx(t, rel=1e-12)


def test_metric_solves_ode():
    """Test f1' = (2 - f3/f1)/2 and f3' = (f3/f1)^2/2 through the chain rule."""
    m = 1.2
    params = TaubNutParams(m=m)
    eta = np.geomspace(1.05, 500.0, 40) / m**2
    h = 1e-6 * eta
    f1p, f3p, _ = tn_metric(params, eta + h)
    f1m, f3m, _ = tn_metric(params, eta - h)
    f1, f3, _ = tn_metric(params, eta)
    rate = deta_dt(m, eta)
    df1 = (f1p - f1m) / (2.0 * h) * rate
    df3 = (f3p - f3m) / (2.0 * h) * rate
    assert np.allclose(df1, (2.0 - f3 / f1) / 2.0, rtol=1e-6, atol=1e-8)
    assert np.allclose(df3, (f3 / f1) ** 2 / 2.0, rtol=1e-6, atol=1e-8)


def test_small_t_series():
    m = 1.0
    for t in (0.01, 0.02):
        f1, f3, _ = tn_metric(TaubNutParams(m=m), tn_eta_at(m, t))
        s1, s3 = tn_series(m, t)
        assert abs(f1 - s1) < 1e-7
        assert abs(f3 - s3) < 1e-7


def test_asd_reference_values():
    a1, a3 = asd_eval(AsdParams.two_parameter(1.0, 1.0), 1.0, 2.0)
    assert a1 == pytest.approx(0.2757206, abs=1e-7)
    assert a3 == pytest.approx(1.0186574, abs=1e-7)


def test_flat_etesi_hausel():
    a1, a3 = asd_eval(AsdParams.etesi_hausel(0.0), 1.0, np.array([1.5, 7.0]))
    assert np.allclose(a1, 1.0)
    assert np.allclose(a3, 1.0)


def test_large_D_is_abelian():
    eta = np.array([1.2, 5.0, 30.0])
    a1, a3 = asd_eval(AsdParams.two_parameter(0.7, 40.0), 1.0, eta)
    b1, b3 = asd_eval(AsdParams.abelian(0.7), 1.0, eta)
    assert np.allclose(a1, b1, atol=1e-12)
    assert np.allclose(a3, b3, rtol=1e-12)


def test_etesi_hausel_is_a_limit():
    B, C = 1.0, 1e-4
    eta = np.linspace(1.1, 50.0, 30)
    limit = AsdParams.two_parameter(C, float(np.arcsinh(B * C)))
    a1, a3 = asd_eval(limit, 1.0, eta)
    e1, e3 = asd_eval(AsdParams.etesi_hausel(B), 1.0, eta)
    assert np.allclose(a1, e1, atol=1e-6)
    assert np.allclose(a3, e3, atol=1e-6)


def test_invalid_family_parameters():
    with pytest.raises(ValueError):
        AsdParams.two_parameter(-1.0, 1.0)
    with pytest.raises(ValueError):
        AsdParams.etesi_hausel(-0.5)
    assert AsdParams.two_parameter(1.0, 0.0).is_self_dual_bundle


@pytest.mark.parametrize(
    "params",
    [
        AsdParams.two_parameter(1.0, 1.0),
        AsdParams.two_parameter(2.5, 0.0),
        AsdParams.abelian(-0.4),
        AsdParams.etesi_hausel(1.0),
    ],
)
def test_closed_forms_solve_asd_equations(params):
    eta = np.geomspace(1.01, 100.0, 400)
    assert asd_residual(params, 1.0, eta) < 1e-10


@settings(max_examples=100, deadline=None)
@given(
    C=st.floats(min_value=0.01, max_value=3.0),
    D=st.floats(min_value=0.01, max_value=3.0),
    m=st.floats(min_value=0.5, max_value=2.0),
)
def test_two_parameter_residual_property(C, D, m):
    eta = np.geomspace(1.05, 50.0, 100) / m**2
    assert asd_residual(AsdParams.two_parameter(C, D), m, eta) < 1e-10


@pytest.mark.parametrize(
    "params",
    [AsdParams.two_parameter(1.0, 1.0), AsdParams.two_parameter(0.3, 2.0), AsdParams.abelian(1.7),
     AsdParams.etesi_hausel(2.0)],
)
def test_conserved_quantity_exact(params):
    m = 1.0
    rows = sample_closed_form(m, params, np.geomspace(1.02, 80.0, 100))
    Q = np.array([r.Q for r in rows])
    assert np.allclose(Q, asd_charge(params), atol=1e-10)


def test_conserved_quantity_by_differences():
    params = AsdParams.two_parameter(1.0, 1.0)
    eta = np.geomspace(1.05, 50.0, 4000)
    _, a3 = asd_eval(params, 1.0, eta)
    Q = conserved_quantity(eta, a3, 1.0)
    assert np.allclose(Q[1:-1], -1.0, atol=1e-4)


def test_random_suite_is_reproducible():
    first = random_residual_suite(10, seed=7)
    second = random_residual_suite(10, seed=7)
    assert [c.C for c in first] == [c.C for c in second]
    assert max(c.residual for c in first) < 1e-10
    assert max(c.charge_drift for c in first) < 1e-9


def test_seed_coefficients():
    mu1, mu3 = mu_from_cd(1.0, 2.0, 1.0)
    assert mu1 == pytest.approx(REFERENCE_MU[0], abs=1e-7)
    assert mu3 == pytest.approx(REFERENCE_MU[1], abs=5e-7)
    assert (mu3 - 0.25) ** 2 - mu1**2 == pytest.approx(1.0 / 16.0, rel=1e-12)


def test_cd_from_mu_families():
    solved = cd_from_mu(*REFERENCE_MU, m=1.0)
    assert solved.family == AsdFamily.TWO_PARAMETER
    assert solved.C == pytest.approx(1.0, abs=1e-5)
    assert solved.D == pytest.approx(2.0, abs=1e-4)

    abelian = cd_from_mu(0.0, 0.6, m=1.0)
    assert abelian.family == AsdFamily.ABELIAN
    assert abelian.C == pytest.approx(4.0 * 0.6 - 1.0)

    boundary = cd_from_mu(0.25, 0.5, m=1.0)
    assert boundary.family == AsdFamily.ETESI_HAUSEL
    assert boundary.B == pytest.approx(1.0)

    with pytest.raises(ConstraintViolation):
        cd_from_mu(0.3, 0.5, m=1.0)
    with pytest.raises(ConstraintViolation):
        cd_from_mu(-0.1, 0.5, m=1.0)


def test_seed_coefficients_match_small_t():
    """Test that a1 ~ mu1 t^2 and a3 ~ mu3 t^2 near the nut."""
    params = AsdParams.two_parameter(1.0, 2.0)
    mu1, mu3 = mu_from_cd(1.0, 2.0, 1.0)
    t = 1e-3
    a1, a3 = asd_eval(params, 1.0, tn_eta_at(1.0, t))
    assert a1 / t**2 == pytest.approx(mu1, rel=1e-4)
    assert a3 / t**2 == pytest.approx(mu3, rel=1e-4)


def test_self_dual_bundle_does_not_vanish_at_nut():
    t = 1e-3
    a1, a3 = asd_eval(AsdParams.two_parameter(1.0, 0.0), 1.0, tn_eta_at(1.0, t))
    assert a1 == pytest.approx(1.0, abs=1e-4)
    assert a3 == pytest.approx(1.0, abs=1e-4)


def test_linearisation_eigenvalues():
    assert linearisation_eigenvalues() == pytest.approx([-8.0, -3.0, -2.0, 0.0], abs=1e-12)


def test_linearisation_matches_normal_form():
    y0 = normal_form_fixed_point(-1.0 / 12.0, 0.0, 2.0)
    system = SingularSystem.from_regular_part(lambda t, y: normal_form_rhs(t, y, 0.0, 2.0), y0)
    eigenvalues = sorted(np.linalg.eigvals(system.jacobian()).real)
    assert eigenvalues == pytest.approx([-8.0, -3.0, -2.0, 0.0], abs=1e-6)
    system.validate()


def test_rescaled_flow_needs_small_lambda():
    params = params_for_taub_nut(1.0, 0.5)
    with pytest.raises(DomainError):
        rescaled_b7_flow(params, 0.6, t_max=4.0)


def test_integrated_asd_conserves_charge():
    solution = integrate_asd(1.0, *REFERENCE_MU, t_max=10.0, rel_tol=1e-11)
    Q = conserved_quantity(solution.eta, solution.a3, 1.0, d_eta_a3=solution.d_eta_a3)
    assert np.max(np.abs(Q - Q[0])) < 1e-7
    assert Q[0] == pytest.approx(-1.0, abs=1e-5)


def test_integrated_asd_matches_closed_form():
    solution = integrate_asd(1.0, *REFERENCE_MU, t_max=10.0, rel_tol=1e-11)
    a1, a3 = asd_eval(cd_from_mu(*REFERENCE_MU, m=1.0), 1.0, solution.eta)
    assert np.allclose(solution.a1, a1, atol=1e-6)
    assert np.allclose(solution.a3, a3, atol=1e-6)


@pytest.mark.slow
def test_collapse_converges_to_taub_nut(tn_flow):
    distances = []
    for r0 in (0.2, 0.1):
        p = params_for_taub_nut(1.0, r0)
        flow = rescaled_b7_flow(p, p.r0, t_max=4.0, rel_tol=1e-11)
        limit = np.interp(flow.t, tn_flow.t, tn_flow.A1)
        distances.append(float(np.max(np.abs(flow.A1 - limit))))
    assert distances[1] < distances[0]


@pytest.mark.slow
def test_adiabatic_errors_decrease():
    table = adiabatic_instanton_compare(*REFERENCE_MU, m=1.0, r0_values=[0.4, 0.2, 0.1], t_max=4.0)
    assert table.asd.family == AsdFamily.TWO_PARAMETER
    errors = [max(r.sup_err_a1, r.sup_err_a3) for r in table.rows]
    assert errors[2] < errors[1] < errors[0]
    assert errors[2] < errors[0] / 4.0

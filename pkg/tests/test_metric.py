"""Tests for the B7 family and its flows."""

import numpy as np
import pytest
from pydantic import ValidationError

from g2flow.core.errors import ConstraintViolation, FitUnstable, FormMismatch
from g2flow.metric.b7 import (
    B7Params,
    FamilyKind,
    MetricSample,
    ab_from_metric,
    eval_H,
    hitchin_F,
    metric_squares,
    normal_form_fixed_point,
    seed_metric,
)
from g2flow.metric.flow import (
    INEQUALITY_TOL,
    METRIC_COLUMNS,
    MetricInterpolant,
    asymptotic_remainders,
    check_inequalities,
    check_seed,
    estimate_ell,
    flow_metric,
    flow_metric_ABform,
    member_with_ell,
    metric_grid,
    rescale_trajectory,
)
from g2flow.taubnut.closed_form import TaubNutParams, tn_eta_at, tn_metric


def test_constraint_is_enforced():
    with pytest.raises(ValidationError):
        B7Params(r0=1.0, abar=0.01, bbar=0.01)


def test_family_kinds():
    assert B7Params.ac_point(1.0).kind == FamilyKind.AC
    assert B7Params.from_r0_abar(1.0, 1.0 / 128.0).kind == FamilyKind.ALC
    assert B7Params.from_r0_abar(1.0, 1.0 / 640.0).kind == FamilyKind.INCOMPLETE


def test_taub_nut_member():
    params = B7Params.from_taub_nut(m=1.5, r0=0.5)
    assert 64.0 * params.r0 * (2.0 * params.abar + params.bbar) == pytest.approx(1.0)
    assert params.taub_nut_radius == pytest.approx(1.5)
    assert params.normal_form_a3(rescaled=True) == pytest.approx(-1.0 / (12.0 * 1.5**2))
    with pytest.raises(ConstraintViolation):
        B7Params.from_taub_nut(m=3.0, r0=1.0)


def test_fixed_point_of_normal_form():
    y0 = normal_form_fixed_point(-0.1, 1.0, 2.0)
    assert y0[2] == y0[3] == pytest.approx(1.0 / 8.0)
    assert y0[0] == pytest.approx((-1.0 / 32.0 + 0.1) / 2.0)


def test_hitchin_F_factorisation():
    """Test the factored F against 4a^2(b - p)(b + q) - (b^2 + pq)^2 with q = -p."""
    a, b, p = 1.7, 1.3, 1.0
    expanded = 4.0 * a * a * (b - p) * (b - p) - (b * b - p * p) ** 2
    assert hitchin_F(a, b, p) == pytest.approx(expanded, rel=1e-12)


def test_metric_grid_spacing():
    grid = metric_grid(2.0, 100.0)
    assert grid[-1] == pytest.approx(100.0)
    assert np.max(np.diff(grid)) <= 1.0 + 1e-12


def test_reference_member_is_alc(alc_metric, ell):
    assert alc_metric.termination.time == pytest.approx(400.0)
    assert ell > 0.0
    assert alc_metric.fit_err < 1e-3 * ell
    assert alc_metric.A3[-1] == pytest.approx(ell, rel=1e-2)
    assert np.all(np.diff(alc_metric.A3) > 0.0)


def test_inequalities_hold_along_reference_member(alc_metric):
    report = check_inequalities(alc_metric)
    assert report.violations == []
    assert report.margins["metric_positivity"] > 0.0


def test_hitchin_and_orbit_variables_agree(alc_metric):
    late = alc_metric.t > 10.0
    a, b, adot, bdot = ab_from_metric(
        alc_metric.A1[late], alc_metric.A3[late], alc_metric.B1[late], alc_metric.B3[late], alc_metric.p
    )
    assert np.allclose(a, alc_metric.a[late], rtol=1e-8)
    assert np.allclose(bdot, alc_metric.bdot[late], rtol=1e-8)


def test_H_forms_agree(alc_metric):
    n = len(alc_metric)
    for i in range(n // 2, n, max(1, n // 20)):
        assert eval_H(alc_metric.sample(i)) > 0.0


def test_both_flow_forms_agree(alc_params):
    hitchin = flow_metric(alc_params, t_max=50.0, rel_tol=1e-11, check=False)
    orbit = flow_metric_ABform(alc_params, t_max=50.0, rel_tol=1e-11, check=False)
    assert np.allclose(hitchin.t, orbit.t)
    assert np.allclose(hitchin.A1, orbit.A1, rtol=1e-6)
    assert np.allclose(hitchin.B3, orbit.B3, rtol=1e-6)


def test_instanton_coefficient_decay(alc_metric, ell):
    report = asymptotic_remainders(alc_metric, ell)
    assert report.c_g_exponent == pytest.approx(-3.0, abs=0.1)
    assert report.c_f_exponent == pytest.approx(-1.0, abs=0.2)


def test_interpolant_reproduces_samples(alc_metric):
    interp = MetricInterpolant(alc_metric)
    idx = [5, len(alc_metric) // 3, len(alc_metric) - 1]
    A1, A3, B1, B3 = interp(alc_metric.t[idx])
    assert np.allclose(A1, alc_metric.A1[idx], rtol=1e-12)
    assert np.allclose(B3, alc_metric.B3[idx], rtol=1e-12)
    below = 0.5 * alc_metric.t[0]
    assert interp(below)[0] == pytest.approx(below / 2.0, rel=1e-3)
    assert np.allclose(interp.normal_form(0.0), alc_metric.y0)
    with pytest.raises(ValueError):
        interp(2.0 * alc_metric.t_max)


def test_scaling_symmetry(alc_metric, ell):
    """Test that doubling r0 doubles the fibre length."""
    doubled = flow_metric(B7Params.from_r0_abar(2.0, 1.0 / 256.0), t_max=800.0, rel_tol=1e-10)
    assert doubled.ell == pytest.approx(2.0 * ell, rel=1e-3)
    back = rescale_trajectory(doubled, 2.0)
    assert back.ell == pytest.approx(ell, rel=1e-3)
    assert back.t[-1] == pytest.approx(400.0)


def test_taub_nut_limit_matches_closed_form(tn_flow):
    """Test that the lam = 0 collapse is Taub-NUT with m = 1 times a round sphere."""
    assert np.allclose(tn_flow.B1, 2.0, atol=1e-12)
    assert np.allclose(tn_flow.B3, 2.0, atol=1e-12)
    params = TaubNutParams(m=1.0)
    for i in range(0, len(tn_flow), 25):
        t = float(tn_flow.t[i])
        f1, f3, _ = tn_metric(params, tn_eta_at(1.0, t))
        assert tn_flow.A1[i] == pytest.approx(f1, abs=1e-7)
        assert tn_flow.A3[i] == pytest.approx(f3, abs=1e-7)


@pytest.mark.slow
def test_member_with_prescribed_ell(ell):
    params = member_with_ell(1.0, ell)
    assert 64.0 * params.abar == pytest.approx(0.5, rel=1e-3)


def test_metric_squares_repeat_the_symmetric_directions():
    sample = MetricSample(t=1.0, A1=0.5, A3=0.25, B1=2.0, B3=3.0)
    assert metric_squares(sample) == (0.25, 0.25, 0.0625, 4.0, 4.0, 9.0)


def test_seed_of_the_conical_member():
    params = B7Params(r0=1.0, abar=1.0 / 192.0, bbar=1.0 / 192.0)
    sample = seed_metric(params, 0.01)
    assert sample.a == pytest.approx(1.0 + 0.25e-4 + 1e-8 / 192.0, rel=1e-15)
    assert sample.a == sample.b


def test_seed_difference_is_quartic(alc_params):
    sample = seed_metric(alc_params, 0.05)
    assert sample.a - sample.b == pytest.approx(0.05**4 / 128.0, rel=1e-6)
    assert 0.05**4 / 128.0 == pytest.approx(4.8828125e-8, rel=1e-12)


def test_seed_orbit_is_round(alc_params):
    """Test that A3/A1 and B3/B1 tend to one at the singular orbit."""
    gaps = []
    for eps in (1e-2, 1e-3, 1e-4):
        sample = seed_metric(alc_params, eps)
        gaps.append(max(abs(sample.A3 / sample.A1 - 1.0), abs(sample.B3 / sample.B1 - 1.0)))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-6


def test_flow_starts_on_the_series(alc_params, alc_metric):
    t0 = float(alc_metric.t[0])
    p = alc_params.p
    deviation = check_seed(alc_params, t0, alc_metric.a[0] - p, alc_metric.b[0] - p)
    assert deviation < 1e-5
    with pytest.raises(FormMismatch):
        check_seed(alc_params, t0, 1.01 * (alc_metric.a[0] - p), alc_metric.b[0] - p)


def test_alc_asymptotics(alc_metric, ell):
    i = int(np.argmin(np.abs(alc_metric.t - 200.0)))
    t = float(alc_metric.t[i])
    assert alc_metric.fit_err < 1e-4 * ell
    assert alc_metric.a[i] / t**3 == pytest.approx(1.0 / 18.0, rel=1e-2)
    assert alc_metric.b[i] / t**2 == pytest.approx(ell / 6.0, rel=1e-2)


@pytest.mark.slow
@pytest.mark.parametrize("x", [0.45, 0.75, 1.5, 4.0, 9.0])
def test_inequalities_across_the_family(x):
    """Test the family inequalities and H > 0 on members with 64 abar r0 = x."""
    params = B7Params.from_r0_abar(1.0, x / 64.0)
    assert params.kind == FamilyKind.ALC
    traj = flow_metric(params, t_max=100.0, rel_tol=1e-10, check=False)
    report = check_inequalities(traj)
    assert report.violations == []
    assert report.margins["H"] > -INEQUALITY_TOL


def test_conical_member_keeps_a_equal_to_b():
    traj = flow_metric(B7Params.ac_point(1.0), t_max=20.0, rel_tol=1e-10)
    assert np.max(np.abs(traj.a - traj.b) / traj.b) < 1e-7
    assert traj.ell is None
    with pytest.raises(FitUnstable):
        estimate_ell(traj)


def test_metric_table_layout(alc_metric, ell):
    rows = alc_metric.rows()
    assert len(METRIC_COLUMNS) == 10
    assert len(rows) == len(alc_metric)
    t, a, b, adot, bdot, A1, A3, B1, B3, H = rows[-1]
    assert (t, a, b, A3) == (alc_metric.t[-1], alc_metric.a[-1], alc_metric.b[-1], alc_metric.A3[-1])
    sidecar = alc_metric.sidecar()
    assert sidecar["r0"] == 1.0
    assert sidecar["abar"] == 1.0 / 128.0
    assert sidecar["ell"] == ell
    assert sidecar["t_max"] == 400.0
    assert sidecar["rel_tol"] == 1e-10
    assert set(sidecar) == {"r0", "abar", "bbar", "ell", "fit_err", "t_max", "rel_tol"}

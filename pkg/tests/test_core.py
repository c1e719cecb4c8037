"""Tests for the integrator, singular seeding and fitting helpers."""

import numpy as np
import pytest

from g2flow.core.errors import InvalidSystem, StepUnderflow
from g2flow.core.fitting import (
    exponential_decay_fit,
    limit_at_zero,
    power_law_exponent,
    richardson_limit,
)
from g2flow.core.integrator import (
    Termination,
    TerminationKind,
    Trajectory,
    integrate_adaptive,
    sample_grid,
    terminal_event,
)
from g2flow.core.singular import SingularSystem, solve_singular_ivp, taylor_seed
from g2flow.taubnut.adiabatic import taub_nut_flow
from g2flow.taubnut.closed_form import TaubNutParams, tn_eta_at, tn_metric


def test_linear_decay_reaches_end():
    """Test y' = -y against exp(-t)."""
    traj = integrate_adaptive(lambda t, y: -y, [1.0], 0.0, 1.0, 1e-10, 1e-12)
    assert traj.reached_end
    assert traj.final_state[0] == pytest.approx(np.exp(-1.0), rel=1e-9)


def test_output_grid_is_respected():
    grid = np.linspace(0.0, 2.0, 21)
    traj = integrate_adaptive(lambda t, y: np.cos(t) * np.ones(1), [0.0], 0.0, 2.0, 1e-10, 1e-12,
                              t_eval=grid)
    assert np.allclose(traj.times, grid)
    assert np.allclose(traj.component(0), np.sin(grid), atol=1e-8)


def test_blow_up_is_a_termination():
    """Test that y' = y^2 from y(0) = 1 stops before t = 1."""
    traj = integrate_adaptive(lambda t, y: y**2, [1.0], 0.0, 2.0, 1e-8, 1e-10, blowup_threshold=1e6)
    assert traj.termination.kind == TerminationKind.BLOW_UP
    assert traj.termination.time < 1.0
    assert traj.termination.time == pytest.approx(1.0, abs=1e-4)


def test_named_event_termination():
    event = terminal_event(lambda t, y: y[0] - 0.5, "half", direction=-1.0)
    traj = integrate_adaptive(lambda t, y: -y, [1.0], 0.0, 5.0, 1e-10, 1e-12, events=[event])
    assert traj.termination.kind == TerminationKind.EVENT
    assert traj.termination.event == "half"
    assert traj.termination.time == pytest.approx(np.log(2.0), rel=1e-8)


def test_require_no_underflow_raises():
    traj = Trajectory(
        times=np.array([0.0, 0.1]),
        states=np.zeros((2, 1)),
        termination=Termination(kind=TerminationKind.STEP_UNDERFLOW, time=0.1),
    )
    with pytest.raises(StepUnderflow) as info:
        traj.require_no_underflow()
    assert info.value.time == 0.1


def test_bad_tolerances_rejected():
    with pytest.raises(ValueError):
        integrate_adaptive(lambda t, y: -y, [1.0], 0.0, 1.0, 0.0, 1e-12)
    with pytest.raises(ValueError):
        integrate_adaptive(lambda t, y: -y, [1.0], 1.0, 1.0, 1e-8, 1e-12)


def test_sample_grid_switches_to_uniform():
    grid = sample_grid(0.01, 50.0, per_decade=100, max_spacing=0.5)
    assert grid[0] == pytest.approx(0.01)
    assert grid[-1] == pytest.approx(50.0)
    assert np.all(np.diff(grid) > 0.0)
    assert np.max(np.diff(grid)) <= 0.5 + 1e-12


def test_taylor_seed():
    assert taylor_seed([[1.0], [2.0], [3.0]], 0.5)[0] == pytest.approx(1.0 + 1.0 + 0.75)
    with pytest.raises(ValueError):
        taylor_seed([[1.0]], 0.0)


def test_singular_system_exact_solution():
    """Test t y' = -y + t, whose solution through y(0) = 0 is t/2."""
    system = SingularSystem.from_regular_part(lambda t, y: -y + t, [0.0], name="linear")
    eigenvalues = system.validate()
    assert eigenvalues[0].real == pytest.approx(-1.0, abs=1e-8)
    coeffs = system.series_coefficients()
    assert coeffs[1][0] == pytest.approx(0.5, abs=1e-8)
    traj = solve_singular_ivp(system, 1.0, 1e-10)
    assert traj.times[0] == 0.0
    assert traj.seed_time is not None
    assert traj.final_state[0] == pytest.approx(0.5, rel=1e-8)


def test_singular_system_rejects_non_fixed_point():
    system = SingularSystem.from_regular_part(lambda t, y: -y + t, [1.0])
    with pytest.raises(InvalidSystem):
        system.validate()


def test_singular_system_rejects_resonance():
    """Test that an eigenvalue 1 of the leading part is refused."""
    system = SingularSystem.from_regular_part(lambda t, y: y + t, [0.0])
    with pytest.raises(InvalidSystem):
        system.validate()


def test_richardson_limit():
    t = np.linspace(50.0, 500.0, 40)
    limit, err = richardson_limit(t, 2.0 + 3.0 / t + 1.0 / t**2, order=3)
    assert limit == pytest.approx(2.0, abs=1e-9)
    assert err < 1e-8


def test_limit_at_zero():
    t = np.linspace(1e-3, 1e-2, 20)
    limit, _ = limit_at_zero(t, 1.0 + 4.0 * t**2)
    assert limit == pytest.approx(1.0, abs=1e-12)


def test_power_law_exponent():
    t = np.geomspace(1.0, 100.0, 30)
    assert power_law_exponent(t, 5.0 * t**-3) == pytest.approx(-3.0, abs=1e-10)


def test_exponential_decay_fit():
    t = np.linspace(10.0, 100.0, 50)
    rate, power, residual = exponential_decay_fit(t, 1.0 - 0.5 * t - 2.5 * np.log(t))
    assert rate == pytest.approx(-0.5, abs=1e-8)
    assert power == pytest.approx(-2.5, abs=1e-6)
    assert residual < 1e-8


def test_step_collapse_is_an_underflow():
    """Test that y' = y^2 past its pole ends in StepUnderflow when blow-up is out of reach."""
    with np.errstate(over="ignore", invalid="ignore"):
        traj = integrate_adaptive(lambda t, y: y**2, [1.0], 0.0, 2.0, 1e-10, 1e-12,
                                  blowup_threshold=1e300)
    assert traj.termination.kind == TerminationKind.STEP_UNDERFLOW
    assert traj.termination.time == pytest.approx(1.0, abs=1e-4)
    assert traj.final_time == traj.termination.time
    with pytest.raises(StepUnderflow):
        traj.require_no_underflow()


def test_seed_time_does_not_change_the_solution():
    """Test t y' = -y + t + t y^2 seeded at two different times."""
    system = SingularSystem.from_regular_part(lambda t, y: -y + t + t * y**2, [0.0], name="riccati")
    first = solve_singular_ivp(system, 1.0, 1e-10, eps=1e-3)
    second = solve_singular_ivp(system, 1.0, 1e-10, eps=5e-4)
    assert first.seed_time == 1e-3
    assert second.seed_time == 5e-4
    assert abs(first.final_state[0] - second.final_state[0]) < 1e-9


def test_solution_is_continuous_in_y0():
    """Test y' = 1 - y^2 written as t y' = t (1 - y^2) from two nearby starts."""
    delta = 1e-6
    finals = []
    for y0 in (0.2, 0.2 + delta):
        system = SingularSystem.from_regular_part(lambda t, y: t * (1.0 - y**2), [y0])
        finals.append(solve_singular_ivp(system, 1.0, 1e-11).final_state[0])
    ratio = abs(finals[1] - finals[0]) / delta
    assert 0.1 < ratio < 1e3
    assert finals[0] == pytest.approx(np.tanh(1.0 + np.arctanh(0.2)), rel=1e-9)


def test_taub_nut_benchmark(tn_flow):
    """Test the collapsed flow against the closed-form Taub-NUT metric at t = 5."""
    i = int(np.argmin(np.abs(tn_flow.t - 5.0)))
    t = float(tn_flow.t[i])
    f1, f3, _ = tn_metric(TaubNutParams(m=1.0), tn_eta_at(1.0, t))
    assert tn_flow.A1[i] == pytest.approx(f1, abs=1e-8)
    assert tn_flow.A3[i] == pytest.approx(f3, abs=1e-8)


def test_tightening_the_tolerance_reduces_the_error():
    errors = []
    for rel_tol in (1e-7, 1e-10):
        flow = taub_nut_flow(1.0, t_max=6.0, rel_tol=rel_tol)
        i = int(np.argmin(np.abs(flow.t - 5.0)))
        f1, f3, _ = tn_metric(TaubNutParams(m=1.0), tn_eta_at(1.0, float(flow.t[i])))
        errors.append(max(abs(flow.A1[i] - f1), abs(flow.A3[i] - f3)))
    loose, tight = errors
    assert tight <= loose or tight < 1e-10
    assert tight < 1e-7

"""Tests for end data, region scans and the boundary search."""

import inspect

import numpy as np
import pytest

from g2flow.classify.ends import (
    EndConditions,
    backward_box_radius,
    backward_contraction_rate,
    coefficient_remainders,
    default_end_time,
    end_grid,
    end_seed_state,
    shoot_backward,
)
from g2flow.classify.scan import (
    BOUNDARY_COLUMNS,
    REGION_COLUMNS,
    Cell,
    ClassificationMap,
    boundary_curve,
    comparison_order,
    default_bracket,
    guaranteed_complete,
    guaranteed_incomplete,
    scan_region,
)
from g2flow.core.errors import BadBracket, HypothesisNotMet, InvalidEnd
from g2flow.instanton.flow import flow_instanton
from g2flow.instanton.models import InstantonInit, Verdict, VerdictKind


def test_end_conditions_need_flux(ell):
    with pytest.raises(InvalidEnd):
        EndConditions(G_inf=0.5 / ell, lam=1.0).check(ell)
    assert EndConditions(G_inf=1.0 / ell, lam=0.0).check(ell).is_abelian


def test_end_grid(ell):
    ends = end_grid(ell, [1.2, 2.0], [0.0, 1.0])
    assert len(ends) == 4
    assert ends[0].G_inf == pytest.approx(1.2 / ell)
    assert [e.lam for e in ends] == [0.0, 1.0, 0.0, 1.0]


def test_default_end_time(alc_metric, ell):
    T = default_end_time(ell, alc_metric)
    assert min(20.0 * ell, alc_metric.t_max) <= T <= alc_metric.t_max
    t, remainder = coefficient_remainders(alc_metric, ell)
    if T < alc_metric.t_max and T > 20.0 * ell:
        assert np.all(remainder[t >= T] < 1e-6)


def test_end_time_waits_for_the_remainders(alc_metric, ell):
    """Test that the end time moves out to where the coefficient remainders settle."""
    t, remainder = coefficient_remainders(alc_metric, ell)
    late = t > 0.5 * alc_metric.t_max
    assert np.max(remainder[late]) < np.max(remainder[(t > 5.0) & (t < 10.0)])
    if np.any(remainder[late] >= 1e-6):
        assert default_end_time(ell, alc_metric) >= float(t[late][np.flatnonzero(remainder[late] >= 1e-6)[-1]])


def test_default_bracket(ell):
    with pytest.raises(BadBracket):
        default_bracket(0.4 * ell**-2, ell)
    assert default_bracket(ell**-2, ell) == (0.0, ell**-2)


def test_sufficient_conditions(alc_metric, ell):
    assert not guaranteed_incomplete(0.0, 0.1, ell)
    assert guaranteed_incomplete(0.1 * ell**-2, 0.4 * ell**-2, ell)
    assert guaranteed_incomplete(1.0, 0.9, ell)
    assert not guaranteed_incomplete(0.1 * ell**-2, ell**-2, ell)
    assert guaranteed_complete(0.0, 1e6, alc_metric)
    assert not guaranteed_complete(1.0, 0.5, alc_metric)


def test_box_radius(alc_metric):
    radius = backward_box_radius(alc_metric, 1.0)
    assert 0.0 < radius <= np.sqrt(2.0 / 3.0)


def test_strip_below_threshold(alc_metric, ell):
    result = scan_region(
        alc_metric,
        f1_range=(0.0, ell**-2),
        g1_range=(0.1 * ell**-2, 0.4 * ell**-2),
        n_f=3,
        n_g=3,
        t_max=50.0,
    )
    codes = result.codes()
    assert codes.shape == (3, 3)
    assert np.all(codes[0] == 0)
    assert np.all(codes[1:] == 3)
    assert result.invariant_violations() == []
    assert result.boundary == []


def _toy_map() -> ClassificationMap:
    f1_values = np.array([0.0, 0.5, 1.0])
    g1_values = np.array([1.0, 2.0])
    verdicts = {
        (0.0, 1.0): Verdict.abelian(1.0),
        (0.0, 2.0): Verdict.abelian(2.0),
        (0.5, 1.0): Verdict.incomplete(3.0, "negative_g"),
        (0.5, 2.0): Verdict(kind=VerdictKind.COMPLETE_EXPONENTIAL, G_inf=1.5),
        (1.0, 1.0): Verdict.incomplete(2.0, "flux_bound"),
        (1.0, 2.0): Verdict.incomplete(4.0, "negative_g"),
    }
    cells = [Cell(f1=f, g1=g, verdict=verdicts[(f, g)]) for f in f1_values for g in g1_values]
    return ClassificationMap(ell=1.0, f1_values=f1_values, g1_values=g1_values, cells=cells)


def test_map_accessors():
    m = _toy_map()
    assert m.cell(1, 1).verdict.kind == VerdictKind.COMPLETE_EXPONENTIAL
    assert m.codes().tolist() == [[0, 0], [3, 1], [3, 3]]
    assert m.counts() == {"abelian": 2, "incomplete": 3, "complete_exponential": 1}
    assert m.transitions(0) == [0.5]
    assert m.transitions(1) == [1.0]
    assert m.invariant_violations() == []


def test_map_mirror():
    m = _toy_map().mirrored()
    assert m.f1_values.tolist() == [-1.0, -0.5, -0.0]
    assert m.cell(1, 1).f1 == -0.5
    assert m.cell(1, 1).verdict.kind == VerdictKind.COMPLETE_EXPONENTIAL
    assert m.codes().tolist() == [[3, 3], [3, 1], [0, 0]]


def test_map_flags_structure_breaks():
    m = _toy_map()
    cells = list(m.cells)
    cells[0] = Cell(f1=0.0, g1=1.0, verdict=Verdict.incomplete(1.0, "negative_g"))
    broken = m.model_copy(update={"cells": cells})
    assert any("f1 = 0" in p for p in broken.invariant_violations())


def test_map_lattice_boundary():
    m = _toy_map()
    assert m.lattice_boundary() == [(1.0, 0.25), (2.0, 0.75)]
    with_boundary = m.model_copy(update={"boundary": m.lattice_boundary()})
    assert with_boundary.boundary_rows() == [(1.0, 0.25), (2.0, 0.75)]
    assert with_boundary.invariant_violations() == []
    assert with_boundary.rows()[3] == (0.5, 2.0, "complete_exponential", 1.5, None)
    assert len(REGION_COLUMNS) == len(with_boundary.rows()[0])
    assert BOUNDARY_COLUMNS == ["g1", "f_boundary"]


def test_map_flags_a_decreasing_boundary():
    m = _toy_map().model_copy(update={"boundary": [(1.0, 0.75), (2.0, 0.25)]})
    assert any("boundary decreases" in p for p in m.invariant_violations())
    level = _toy_map().model_copy(update={"boundary": [(1.0, 0.5), (2.0, 0.5)]})
    assert level.invariant_violations() == []


def test_abelian_end_seed_matches_exact_solution(alc_metric, ell):
    ec = EndConditions(G_inf=1.5 / ell, lam=0.0)
    seed = end_seed_state(ec, ell, alc_metric)
    T = seed.T
    A3 = float(np.interp(T, alc_metric.t, alc_metric.A3))
    assert seed.f == 0.0
    assert seed.g == pytest.approx(ec.G_inf * A3 / ell, rel=1e-3)


def test_abelian_backward_shot_closes(alc_metric, ell):
    ec = EndConditions(G_inf=1.5 / ell, lam=0.0)
    result = shoot_backward(ec, alc_metric)
    assert result.init.f1 == 0.0
    assert result.init.g1 == pytest.approx(0.75 / ell**2, rel=1e-3)
    assert result.variation < 1e-4


def test_boundary_rejects_one_sided_bracket(alc_metric, ell):
    with pytest.raises(BadBracket):
        boundary_curve(alc_metric, 0.4 * ell**-2, bracket=(0.1 * ell**-2, 0.2 * ell**-2), t_max=50.0)


def test_abelian_backward_contraction(alc_metric, ell):
    result = shoot_backward(EndConditions(G_inf=1.2 / ell, lam=0.0), alc_metric)
    assert backward_contraction_rate(result) == pytest.approx(2.0, abs=0.2)


def test_comparison_needs_ordered_pair(alc_metric, ell):
    traj = flow_instanton(InstantonInit(f1=0.5 * ell**-2, g1=1.5 * ell**-2), alc_metric, t_max=20.0)
    with pytest.raises(HypothesisNotMet):
        comparison_order(traj, traj)


def test_scans_escalate_by_default():
    assert inspect.signature(scan_region).parameters["escalate"].default is True

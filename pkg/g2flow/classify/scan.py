"""Region scans of the (f1, g1) plane and the boundary of the complete region."""

import logging
from multiprocessing import Pool
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..core.errors import BadBracket, HypothesisNotMet
from ..instanton.flow import COINTEGRATED, flow_instanton
from ..instanton.models import InstantonInit, InstantonTrajectory, Verdict, VerdictKind
from ..instanton.verdict import boundary_tolerance, check_comparison
from ..metric.flow import MetricTrajectory, extend_metric

logger = logging.getLogger(__name__)

MAX_ESCALATION = 16
DEFAULT_CELLS = 64

REGION_COLUMNS = ["f1", "g1", "verdict", "Ginf", "lambda_fit"]
BOUNDARY_COLUMNS = ["g1", "f_boundary"]


def sup_H(metric: MetricTrajectory) -> float:
    """Supremum of H over the sampled metric."""
    return float(np.max(metric.H()))


def guaranteed_complete(f1: float, g1: float, metric: MetricTrajectory) -> bool:
    """Sufficient condition g1 >= sup H / 2 + |f1| for a complete solution."""
    return g1 >= 0.5 * sup_H(metric) + abs(f1)


def guaranteed_incomplete(f1: float, g1: float, ell: float) -> bool:
    """Sufficient conditions for incompleteness with f1 != 0."""
    if f1 == 0.0:
        return False
    return g1 <= 0.5 * ell**-2 or abs(f1) >= g1 >= 0.0


def classify_with_escalation(
    init: InstantonInit,
    metric: MetricTrajectory,
    t_max: Optional[float] = None,
    rel_tol: float = 1e-10,
    max_factor: int = MAX_ESCALATION,
    mode: str = COINTEGRATED,
) -> InstantonTrajectory:
    """
    Flow and classify, doubling t_max while the verdict is undecided.

    The metric is re-integrated when the doubled time passes its end.
    """
    t_max = metric.t_max if t_max is None else t_max
    factor = 1
    current = metric
    while True:
        horizon = t_max * factor
        current = extend_metric(current, horizon)
        traj = flow_instanton(init, current, horizon, rel_tol, mode=mode)
        if traj.verdict is None or traj.verdict.kind != VerdictKind.UNDECIDED:
            return traj
        if factor * 2 > max_factor:
            logger.warning(
                f"f1={init.f1:g}, g1={init.g1:g} still undecided at t_max={horizon:g}"
            )
            return traj
        factor *= 2
        logger.debug(f"escalating f1={init.f1:g}, g1={init.g1:g} to t_max={t_max * factor:g}")


class Cell(BaseModel):
    """One classified point of the (f1, g1) plane."""

    model_config = ConfigDict(frozen=True)

    f1: float
    g1: float
    verdict: Verdict


class ClassificationMap(BaseModel):
    """Verdicts on a rectangular (f1, g1) lattice, row-major in f1."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    ell: float
    f1_values: np.ndarray
    g1_values: np.ndarray
    cells: List[Cell]
    boundary: List[Tuple[float, float]] = []

    def cell(self, i: int, j: int) -> Cell:
        """Cell at f1_values[i], g1_values[j]."""
        return self.cells[i * len(self.g1_values) + j]

    def codes(self) -> np.ndarray:
        """Integer verdict codes with shape (n_f, n_g)."""
        return np.array([c.verdict.code for c in self.cells]).reshape(
            len(self.f1_values), len(self.g1_values)
        )

    def counts(self) -> dict:
        out: dict = {}
        for c in self.cells:
            out[c.verdict.kind.value] = out.get(c.verdict.kind.value, 0) + 1
        return out

    def mirrored(self) -> "ClassificationMap":
        """The map under the gauge symmetry f1 -> -f1."""
        n_f, n_g = len(self.f1_values), len(self.g1_values)
        cells = []
        for i in reversed(range(n_f)):
            for j in range(n_g):
                c = self.cell(i, j)
                cells.append(Cell(f1=-c.f1, g1=c.g1, verdict=c.verdict))
        return ClassificationMap(
            ell=self.ell,
            f1_values=-self.f1_values[::-1],
            g1_values=self.g1_values.copy(),
            cells=cells,
            boundary=list(self.boundary),
        )

    def transitions(self, j: int) -> List[float]:
        """f1 values where the verdict at g1_values[j] switches between complete and incomplete."""
        out = []
        previous = None
        for i in range(len(self.f1_values)):
            v = self.cell(i, j).verdict
            if v.kind == VerdictKind.UNDECIDED:
                continue
            if previous is not None and v.is_complete != previous:
                out.append(float(self.f1_values[i]))
            previous = v.is_complete
        return out

    def lattice_boundary(self) -> List[Tuple[float, float]]:
        """
        (g1, f_boundary) for every column above g1 = ell^-2/2.

        f_boundary is the midpoint between the last complete and the first
        incomplete f1 >= 0 of the column; undecided cells are skipped, and
        columns without such a switch contribute nothing.
        """
        half = 0.5 * self.ell**-2
        out = []
        for j, g1 in enumerate(self.g1_values):
            if g1 <= half:
                continue
            last_complete = None
            for i, f1 in enumerate(self.f1_values):
                v = self.cell(i, j).verdict
                if f1 < 0.0 or v.kind == VerdictKind.UNDECIDED:
                    continue
                if v.is_complete:
                    last_complete = float(f1)
                elif last_complete is not None:
                    out.append((float(g1), 0.5 * (last_complete + float(f1))))
                    break
        return out

    def rows(self) -> List[tuple]:
        """Table rows in REGION_COLUMNS order."""
        return [
            (c.f1, c.g1, c.verdict.kind.value, c.verdict.G_inf, c.verdict.lambda_fit)
            for c in self.cells
        ]

    def boundary_rows(self) -> List[tuple]:
        """Table rows in BOUNDARY_COLUMNS order."""
        return [(g1, f_b) for g1, f_b in self.boundary]

    def invariant_violations(self) -> List[str]:
        """Cells or columns that break the expected structure of the map."""
        problems = []
        half = 0.5 * self.ell**-2
        for c in self.cells:
            if c.f1 == 0.0 and c.verdict.kind != VerdictKind.ABELIAN:
                problems.append(f"({c.f1:g}, {c.g1:g}) has f1 = 0 but is {c.verdict.kind.value}")
            if c.f1 != 0.0 and c.g1 <= half and c.verdict.kind != VerdictKind.INCOMPLETE:
                problems.append(f"({c.f1:g}, {c.g1:g}) lies below g1 = ell^-2/2 but is {c.verdict.kind.value}")
        for j, g1 in enumerate(self.g1_values):
            if len(self.transitions(j)) > 1:
                problems.append(f"g1={g1:g} has {len(self.transitions(j))} transitions")
        for (ga, fa), (gb, fb) in zip(self.boundary, self.boundary[1:]):
            if gb > ga and fb < fa:
                problems.append(f"boundary decreases between g1={ga:g} and g1={gb:g}")
        return problems


def _classify_cell(job: Tuple[MetricTrajectory, float, float, float, float, bool]) -> Cell:
    metric, f1, g1, t_max, rel_tol, escalate = job
    init = InstantonInit(f1=f1, g1=g1)
    if escalate:
        traj = classify_with_escalation(init, metric, t_max, rel_tol)
    else:
        traj = flow_instanton(init, metric, t_max, rel_tol)
    return Cell(f1=f1, g1=g1, verdict=traj.verdict)


def default_ranges(ell: float) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """f1 and g1 ranges [0, 2 ell^-2]."""
    top = 2.0 * ell**-2
    return (0.0, top), (0.0, top)


def scan_region(
    metric: MetricTrajectory,
    f1_range: Optional[Tuple[float, float]] = None,
    g1_range: Optional[Tuple[float, float]] = None,
    n_f: int = DEFAULT_CELLS,
    n_g: int = DEFAULT_CELLS,
    rel_tol: float = 1e-10,
    t_max: Optional[float] = None,
    jobs: int = 1,
    escalate: bool = True,
) -> ClassificationMap:
    """
    Classify every lattice point of a rectangle in the (f1, g1) plane.

    Args:
        metric: Complete ALC metric with a known fibre length
        f1_range: (f1_lo, f1_hi), defaults to [0, 2 ell^-2]
        g1_range: (g1_lo, g1_hi), defaults to [0, 2 ell^-2]
        n_f: Number of f1 values
        n_g: Number of g1 values
        rel_tol: Relative tolerance of each flow
        t_max: Final time, defaults to the end of the metric
        jobs: Worker processes
        escalate: Double t_max on undecided cells, up to MAX_ESCALATION times

    Returns:
        ClassificationMap, undecided cells included
    """
    if metric.ell is None:
        raise ValueError("region scans need a metric with a fibre length")
    ell = metric.ell
    default_f, default_g = default_ranges(ell)
    f1_range = f1_range or default_f
    g1_range = g1_range or default_g
    if not (f1_range[1] > f1_range[0] and g1_range[1] > g1_range[0]):
        raise ValueError(f"empty scan rectangle {f1_range} x {g1_range}")
    t_max = metric.t_max if t_max is None else t_max

    f1_values = np.linspace(f1_range[0], f1_range[1], n_f)
    g1_values = np.linspace(g1_range[0], g1_range[1], n_g)
    tasks = [
        (metric, float(f1), float(g1), t_max, rel_tol, escalate)
        for f1 in f1_values
        for g1 in g1_values
    ]
    logger.info(f"scanning {len(tasks)} cells with {jobs} worker(s), ell={ell:.8g}")
    if jobs > 1:
        with Pool(jobs) as pool:
            cells = pool.map(_classify_cell, tasks)
    else:
        cells = [_classify_cell(task) for task in tasks]

    result = ClassificationMap(ell=ell, f1_values=f1_values, g1_values=g1_values, cells=cells)
    result = result.model_copy(update={"boundary": result.lattice_boundary()})
    logger.info(f"scan verdicts: {result.counts()}")
    for problem in result.invariant_violations():
        logger.warning(f"map invariant: {problem}")
    return result


class BoundaryPoint(BaseModel):
    """Result of a boundary bisection at fixed g1."""

    model_config = ConfigDict(frozen=True)

    g1: float
    f_boundary: float
    width: float
    G_inf: Optional[float] = None
    verdict: Optional[Verdict] = None


def default_bracket(g1: float, ell: float) -> Tuple[float, float]:
    """(0, g1): f1 = 0 is abelian and f1 >= g1 is incomplete."""
    if g1 <= 0.5 * ell**-2:
        raise BadBracket(f"g1={g1:g} is not above ell^-2/2; there is no complete f1 > 0", bracket=(0.0, g1))
    return 0.0, g1


def _complete_side(traj: InstantonTrajectory) -> bool:
    verdict = traj.verdict
    return verdict is not None and verdict.is_complete


def boundary_curve(
    metric: MetricTrajectory,
    g1: float,
    bracket: Optional[Tuple[float, float]] = None,
    tol: float = 1e-6,
    rel_tol: float = 1e-10,
    t_max: Optional[float] = None,
) -> BoundaryPoint:
    """
    Bisect in f1 for the edge of the complete region at fixed g1.

    Undecided verdicts (after escalation) count as incomplete.

    Raises:
        BadBracket: If both ends of the bracket classify alike
    """
    ell = metric.ell
    if ell is None:
        raise ValueError("boundary bisection needs a metric with a fibre length")
    lo, hi = bracket if bracket is not None else default_bracket(g1, ell)

    def run(f1: float) -> InstantonTrajectory:
        return classify_with_escalation(InstantonInit(f1=f1, g1=g1), metric, t_max, rel_tol)

    lo_traj, hi_traj = run(lo), run(hi)
    if _complete_side(lo_traj) == _complete_side(hi_traj):
        raise BadBracket(
            f"bracket ({lo:g}, {hi:g}) at g1={g1:g} does not straddle the boundary", bracket=(lo, hi)
        )
    if not _complete_side(lo_traj):
        lo, hi = hi, lo
        lo_traj = hi_traj
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        traj = run(mid)
        if _complete_side(traj):
            lo, lo_traj = mid, traj
        else:
            hi = mid
    f_b = 0.5 * (lo + hi)
    G_inf = lo_traj.G_inf
    if G_inf is not None and abs(G_inf - 1.0 / ell) >= boundary_tolerance(ell):
        logger.warning(
            f"g1={g1:g}: G_inf={G_inf:.8g} at the complete edge is not within tolerance of 1/ell"
        )
    logger.info(f"g1={g1:.8g}: boundary at f1={f_b:.8g}")
    return BoundaryPoint(g1=g1, f_boundary=f_b, width=abs(hi - lo), G_inf=G_inf, verdict=lo_traj.verdict)


def _boundary_job(job) -> BoundaryPoint:
    metric, g1, bracket, tol, rel_tol, t_max = job
    return boundary_curve(metric, g1, bracket, tol, rel_tol, t_max)


def boundary_curve_many(
    metric: MetricTrajectory,
    g1_list: Sequence[float],
    brackets: Optional[Sequence[Optional[Tuple[float, float]]]] = None,
    tol: float = 1e-6,
    rel_tol: float = 1e-10,
    t_max: Optional[float] = None,
    jobs: int = 1,
) -> List[BoundaryPoint]:
    """Boundary bisections for several g1 values, in parallel when jobs > 1."""
    brackets = list(brackets) if brackets is not None else [None] * len(g1_list)
    if len(brackets) != len(g1_list):
        raise ValueError("one bracket per g1 value is required")
    tasks = [(metric, float(g1), br, tol, rel_tol, t_max) for g1, br in zip(g1_list, brackets)]
    if jobs > 1:
        with Pool(jobs) as pool:
            points = pool.map(_boundary_job, tasks)
    else:
        points = [_boundary_job(task) for task in tasks]
    points = sorted(points, key=lambda p: p.g1)
    for a, b in zip(points, points[1:]):
        if not b.f_boundary > a.f_boundary:
            logger.warning(f"boundary not increasing between g1={a.g1:g} and g1={b.g1:g}")
    return points


class ComparisonReport(BaseModel):
    """Outcome of an ordering check between two trajectories."""

    start_time: float
    violations: List[float]
    limits_ordered: Optional[bool] = None


def comparison_order(upper: InstantonTrajectory, lower: InstantonTrajectory) -> ComparisonReport:
    """
    Check that g >= g^, f^ >= f >= 0 at a shared time forces strict order afterwards.

    ``upper`` carries (f, g) and ``lower`` carries (f^, g^).

    Raises:
        HypothesisNotMet: If no shared sample satisfies the hypothesis with a
            nonzero difference
    """
    n = min(len(upper), len(lower))
    g, f = upper.g[:n], np.abs(upper.f[:n])
    gh, fh = lower.g[:n], np.abs(lower.f[:n])
    hypothesis = (g >= gh) & (fh >= f) & (fh > 0.0) & ((g != gh) | (f != fh))
    if not np.any(hypothesis):
        raise HypothesisNotMet("no shared sample satisfies the ordering hypothesis")
    start = int(np.argmax(hypothesis))
    violations = check_comparison(upper, lower)
    limits_ordered = None
    if upper.G_inf is not None and lower.G_inf is not None:
        limits_ordered = upper.G_inf > lower.G_inf
    return ComparisonReport(
        start_time=float(upper.t[start]), violations=violations, limits_ordered=limits_ordered
    )

"""Subcommand implementations and their registry."""

import functools
import logging
import time
from typing import Callable, Dict, List, NamedTuple

import numpy as np

from ..classify.ends import EndConditions, shoot_backward
from ..classify.scan import (
    BOUNDARY_COLUMNS,
    REGION_COLUMNS,
    boundary_curve_many,
    classify_with_escalation,
    scan_region,
)
from ..config import RunConfig, settings
from ..core.errors import NumericalError, UndecidedVerdict
from ..instanton.flow import flow_instanton
from ..instanton.models import TRAJECTORY_COLUMNS, InstantonInit, InstantonTrajectory, VerdictKind
from ..metric.b7 import B7Params, FamilyKind
from ..metric.flow import (
    METRIC_COLUMNS,
    MetricTrajectory,
    check_inequalities,
    estimate_ell_cubic,
    flow_metric,
    member_with_ell,
)
from ..state.artifacts import ArtifactWriter
from ..taubnut.adiabatic import adiabatic_instanton_compare
from ..taubnut.closed_form import (
    AsdParams,
    asd_residual,
    mu_from_cd,
    random_residual_suite,
    sample_closed_form,
)

logger = logging.getLogger(__name__)


class RunContext(NamedTuple):
    config: RunConfig
    writer: ArtifactWriter
    jobs: int


CommandFunc = Callable[[RunContext], int]


class CommandSpec(NamedTuple):
    name: str
    help: str
    func: CommandFunc


COMMANDS: Dict[str, CommandSpec] = {}


def command(name: str, help: str):
    """
    Decorator registering a subcommand.

    Args:
        name: Subcommand name on the command line
        help: One-line description

    Returns:
        Decorator function
    """

    def decorator(func: CommandFunc) -> CommandFunc:
        @functools.wraps(func)
        def wrapper(ctx: RunContext) -> int:
            logger.info(f"{name}: starting (config {ctx.config.config_hash()[:12]})")
            started = time.perf_counter()
            code = func(ctx)
            logger.info(f"{name}: finished in {time.perf_counter() - started:.1f}s")
            return code

        COMMANDS[name] = CommandSpec(name, help, wrapper)
        return wrapper

    return decorator


def resolve_family(config: RunConfig) -> B7Params:
    """The family member a config describes."""
    family = config.family
    if family.ell_target is not None:
        return member_with_ell(family.r0, family.ell_target, config.solver.t_max, config.solver.rel_tol)
    return B7Params.from_r0_abar(family.r0, family.resolved_abar())


def run_metric(config: RunConfig, check: bool = True) -> MetricTrajectory:
    solver = config.solver
    params = resolve_family(config)
    return flow_metric(
        params,
        solver.t_max,
        solver.rel_tol,
        per_decade=solver.per_decade,
        check=check,
        blowup_threshold=solver.blowup_threshold,
    )


def _complete_metric(ctx: RunContext) -> MetricTrajectory:
    """Flow for the instanton commands, reusing a stored fibre length of the same config."""
    metric = run_metric(ctx.config)
    stored = ctx.writer.load_sidecar("metric.json")
    if stored is not None and stored.get("config_hash") == ctx.config.config_hash():
        if stored.get("ell") is not None:
            metric = metric.with_ell(float(stored["ell"]), stored.get("fit_err"))
    if metric.ell is None:
        raise NumericalError("the family member has no fibre length; instanton runs need an ALC metric")
    return metric


@command("metric", help="Integrate a family member and report its fibre length")
def cmd_metric(ctx: RunContext) -> int:
    traj = run_metric(ctx.config)
    params = traj.params
    report = check_inequalities(traj)
    sidecar = dict(
        traj.sidecar(),
        kind=params.kind.value,
        margins=report.margins,
        violations=report.violations,
    )
    try:
        sidecar["ell_cubic"], sidecar["ell_cubic_err"] = estimate_ell_cubic(traj)
    except NumericalError as e:
        logger.debug(f"cubic fibre length unavailable: {e}")
    ctx.writer.write_table("metric", METRIC_COLUMNS, traj.rows(), sidecar)

    print(f"family member r0={params.r0:g} abar={params.abar:.10g} ({params.kind.value})")
    if params.kind == FamilyKind.AC:
        spread = float(np.max(np.abs(traj.a - traj.b) / np.abs(traj.b)))
        print(f"  a = b along the flow: max |a - b|/b = {spread:.3e}")
    if traj.ell is not None:
        print(f"  ell = {traj.ell:.12g} (fit_err {traj.fit_err:.2e})")
    for name, margin in sorted(report.margins.items()):
        print(f"  {name:>20s}: min margin {margin:.6g}")
    return 0


def _write_trajectory(ctx: RunContext, base: str, traj: InstantonTrajectory) -> None:
    ctx.writer.write_table(base, TRAJECTORY_COLUMNS, traj.samples, traj.sidecar())


@command("instanton", help="Flow and classify one initial condition (f1, g1)")
def cmd_instanton(ctx: RunContext) -> int:
    config = ctx.config
    metric = _complete_metric(ctx)
    inst = config.instanton
    scale = metric.ell**-2
    init = InstantonInit(f1=inst.f1_ratio * scale, g1=inst.g1_ratio * scale)
    if inst.escalate:
        traj = classify_with_escalation(init, metric, rel_tol=config.solver.rel_tol, mode=inst.mode)
    else:
        traj = flow_instanton(init, metric, rel_tol=config.solver.rel_tol, mode=inst.mode)
    _write_trajectory(ctx, "instanton", traj)

    verdict = traj.verdict
    print(f"f1={init.f1:.10g} g1={init.g1:.10g}: {verdict.kind.value}")
    if verdict.G_inf is not None:
        print(f"  G_inf*ell = {verdict.G_inf * metric.ell:.10g}")
    if verdict.kind == VerdictKind.UNDECIDED:
        raise UndecidedVerdict(
            f"f1={init.f1:g}, g1={init.g1:g} undecided at t_max={traj.t_max:g}",
            t_max=traj.t_max,
            uncertainty=verdict.uncertainty,
        )
    return 0


@command("scan", help="Classify a lattice of initial conditions (f1, g1)")
def cmd_scan(ctx: RunContext) -> int:
    config = ctx.config
    metric = _complete_metric(ctx)
    scan = config.scan
    region = scan_region(
        metric,
        scan.f1_range,
        scan.g1_range,
        scan.n_f,
        scan.n_g,
        rel_tol=config.solver.rel_tol,
        jobs=ctx.jobs,
        escalate=scan.escalate,
    )
    counts = region.counts()
    ctx.writer.write_table(
        "region",
        REGION_COLUMNS,
        region.rows(),
        {"ell": region.ell, "counts": counts, "violations": region.invariant_violations()},
    )
    ctx.writer.write_table("region_boundary", BOUNDARY_COLUMNS, region.boundary_rows(), {"ell": region.ell})
    ctx.writer.write_text(
        "region.dat",
        ((c.f1, c.g1, c.verdict.code) for c in region.cells),
        sidecar={"columns": ["f1", "g1", "code"], "ell": region.ell},
    )

    print(f"ell = {region.ell:.12g}")
    for kind, count in sorted(counts.items()):
        print(f"  {kind:>22s}: {count}")
    undecided = counts.get(VerdictKind.UNDECIDED.value, 0) / len(region.cells)
    if undecided > scan.undecided_limit:
        raise UndecidedVerdict(
            f"{100 * undecided:.1f}% of cells undecided after escalation", t_max=metric.t_max
        )
    return 0


@command("boundary", help="Bisect the edge of the complete region at fixed g1")
def cmd_boundary(ctx: RunContext) -> int:
    config = ctx.config
    metric = _complete_metric(ctx)
    ell = metric.ell
    g1_list = config.boundary.g1_list
    if not g1_list:
        g1_list = list(np.linspace(0.55, 2.0, config.boundary.n_points) * ell**-2)
    points = boundary_curve_many(
        metric, g1_list, tol=config.boundary.bisect_tol, rel_tol=config.solver.rel_tol, jobs=ctx.jobs
    )
    ctx.writer.write_table(
        "boundary",
        ["g1", "f_boundary", "Ginf_check"],
        ((p.g1, p.f_boundary, p.G_inf) for p in points),
        {"ell": ell, "bisect_tol": config.boundary.bisect_tol},
    )
    for p in points:
        print(f"  g1={p.g1:.10g}  f_boundary={p.f_boundary:.10g}")
    f = [p.f_boundary for p in points]
    if any(b <= a for a, b in zip(f, f[1:])):
        raise NumericalError("boundary values are not strictly increasing in g1")
    return 0


@command("taubnut", help="Check closed-form Taub-NUT instantons")
def cmd_taubnut(ctx: RunContext) -> int:
    tn = ctx.config.taubnut
    asd = AsdParams.two_parameter(tn.C, tn.D)
    eta = np.geomspace(tn.eta_range[0], tn.eta_range[1], tn.n_eta) / tn.m**2
    samples = sample_closed_form(tn.m, asd, eta)
    Q = np.array([row.Q for row in samples])
    residual = asd_residual(asd, tn.m, eta)
    drift = float(np.max(np.abs(Q + tn.C**2)))
    ctx.writer.write_table(
        "taubnut_closed_form",
        ["eta", "t", "f1", "f3", "a1", "a3", "Q"],
        ((r.eta, r.t, r.f1, r.f3, r.a1, r.a3, r.Q) for r in samples),
        {"m": tn.m, "asd": asd},
    )

    suite = random_residual_suite(tn.random_cases, settings.G2FLOW_SEED)
    ctx.writer.write_table(
        "taubnut_residuals",
        ["m", "C", "D", "residual", "charge_drift"],
        ((c.m, c.C, c.D, c.residual, c.charge_drift) for c in suite),
        {"seed": settings.G2FLOW_SEED},
    )
    worst = max([residual] + [c.residual for c in suite])
    worst_drift = max([drift] + [c.charge_drift for c in suite])
    print(f"m={tn.m:g} C={tn.C:g} D={tn.D:g}: residual {residual:.3e}, |Q + C^2| {drift:.3e}")
    print(f"{len(suite)} random cases: worst residual {worst:.3e}, worst charge drift {worst_drift:.3e}")

    if tn.adiabatic:
        _write_adiabatic(ctx)
    if worst > tn.residual_limit:
        raise NumericalError(f"closed-form residual {worst:.3e} above {tn.residual_limit:g}")
    return 0


def _adiabatic_seeds(ctx: RunContext):
    tn = ctx.config.taubnut
    if tn.mu1 is not None:
        return tn.mu1, tn.mu3
    return mu_from_cd(tn.C, tn.D, tn.m)


def _write_adiabatic(ctx: RunContext) -> None:
    tn = ctx.config.taubnut
    mu1, mu3 = _adiabatic_seeds(ctx)
    table = adiabatic_instanton_compare(
        mu1, mu3, tn.m, tn.r0_list, tn.adiabatic_t_max, ctx.config.solver.rel_tol
    )
    ctx.writer.write_table(
        "adiabatic",
        ["r0", "lambda", "sup_err_a1", "sup_err_a3", "t_max"],
        ((r.r0, r.lam, r.sup_err_a1, r.sup_err_a3, r.t_max) for r in table.rows),
        {"mu1": mu1, "mu3": mu3, "m": tn.m, "asd": table.asd, "ratios": table.ratios()},
    )
    for r in table.rows:
        print(f"  r0={r.r0:<8g} sup|a1 err|={r.sup_err_a1:.3e}  sup|a3 err|={r.sup_err_a3:.3e}")


@command("adiabatic", help="Compare collapsing family instantons with Taub-NUT instantons")
def cmd_adiabatic(ctx: RunContext) -> int:
    _write_adiabatic(ctx)
    return 0


@command("endshoot", help="Shoot back from end data (G_inf, lambda) and re-classify")
def cmd_endshoot(ctx: RunContext) -> int:
    config = ctx.config
    metric = _complete_metric(ctx)
    ell = metric.ell
    rows: List[tuple] = []
    failures = 0
    for k, (ratio, lam) in enumerate(zip(config.endshoot.ginf_ratios, config.endshoot.lambdas)):
        ec = EndConditions(G_inf=ratio / ell, lam=lam)
        try:
            shot = shoot_backward(ec, metric, config.endshoot.end_time, config.solver.rel_tol)
        except NumericalError as e:
            logger.warning(f"G_inf={ec.G_inf:.8g}, lam={lam:g}: {e}")
            rows.append((ec.G_inf, lam, None, None, None, None, f"failed: {e}"))
            failures += 1
            continue
        traj = flow_instanton(shot.init, metric, rel_tol=config.solver.rel_tol)
        _write_trajectory(ctx, f"endshoot_{k}", traj)
        verdict = traj.verdict
        status = "ok" if verdict.is_complete else f"verdict {verdict.kind.value}"
        rows.append(
            (ec.G_inf, lam, shot.init.f1, shot.init.g1, verdict.G_inf, verdict.lambda_fit, status)
        )
        print(f"  G_inf={ec.G_inf:.8g} lam={lam:g} -> f1={shot.init.f1:.10g} g1={shot.init.g1:.10g}: {status}")
    ctx.writer.write_table(
        "endshoot",
        ["Ginf", "lambda", "f1", "g1", "Ginf_back", "lambda_back", "status"],
        rows,
        {"ell": ell},
    )
    if failures:
        raise NumericalError(f"{failures} of {len(rows)} end conditions failed to close")
    return 0

"""Flows of the reduced instanton equations f' = -c_f f - f g, g' = -c_g g - f^2.

Near the singular orbit the unknowns are written as f = t*phi, g = t*psi and
integrated together with the normal-form metric, so the coupled system is a
regular singular problem with a free (phi, psi)(0) = (f1, g1). Past the
hand-off time the metric is in orbit coefficients and, for f1 != 0, the
first unknown is u = log|f|.
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from ..core.errors import UndecidedVerdict
from ..core.integrator import (
    DEFAULT_BLOWUP_THRESHOLD,
    EventFunction,
    Termination,
    TerminationKind,
    integrate_adaptive,
    terminal_event,
)
from ..core.singular import SingularSystem, solve_singular_ivp
from ..metric.b7 import (
    ab_rhs,
    hitchin_rhs,
    instanton_coefficients,
    normal_form_rhs,
    normal_form_to_metric,
)
from ..metric.flow import HANDOFF_FRACTION, MetricInterpolant, MetricTrajectory
from .models import FullInstantonTrajectory, InstantonInit, InstantonTrajectory, Verdict, VerdictKind
from .verdict import classify_trajectory

logger = logging.getLogger(__name__)

COINTEGRATED = "cointegrated"
INTERPOLATED = "interpolated"


def instanton_kappas(t: float, y: np.ndarray, lam: float, beta: float) -> Tuple[float, float]:
    """
    (t c_f + 1)/t^2 and (t c_g + 1)/t^2 from normal-form metric values.

    Both are regular at t = 0, with values lam^2/(4 beta^2) + 2 a3 and
    lam^2/(4 beta^2) - 2 a3 + 4 a1.
    """
    a1, a3, b1, b3 = y
    t2 = t * t
    l2 = lam * lam
    al1 = 0.5 + t2 * a1
    al3 = 0.5 + t2 * a3
    B1 = beta + t2 * b1
    B3 = beta + t2 * b3
    shape = (2.0 * a1 - a3 + 2.0 * t2 * a1 * a1) / al1**2
    kappa_f = 0.5 * (
        l2 * al1 / (B1 * B3)
        + t2 * (b1 - b3) ** 2 / (al1 * B1 * B3)
        + 2.0 * (a3 - a1) / (al1 * al3)
        + shape
    )
    kappa_g = 0.5 * l2 * al3 / B1**2 + 0.5 * shape
    return kappa_f, kappa_g


def seed_instanton(init: InstantonInit, metric: MetricTrajectory, eps: float) -> np.ndarray:
    """
    Series value of (f⁺, g⁺) at a small time.

    One Picard step against the metric series gives
    f = f1 eps - (kappa_f + g1) f1 eps^3/2 and
    g = g1 eps - (kappa_g g1 + f1^2) eps^3/2.

    Args:
        init: Leading coefficients
        metric: Metric the instanton lives on
        eps: Seed time, inside the normal-form region

    Returns:
        Array (f, g) at eps
    """
    if not 0.0 < eps <= HANDOFF_FRACTION * metric.beta:
        raise ValueError(f"seed time {eps} outside (0, {HANDOFF_FRACTION * metric.beta}]")
    kappa_f, kappa_g = instanton_kappas(0.0, metric.y0, metric.lam, metric.beta)
    f1, g1 = init.f1, init.g1
    e3 = eps**3
    return np.array(
        [
            f1 * eps - 0.5 * (kappa_f + g1) * f1 * e3,
            g1 * eps - 0.5 * (kappa_g * g1 + f1 * f1) * e3,
        ]
    )


def _pair_normal_form(t: float, pair: np.ndarray, metric_nf: np.ndarray, lam: float,
                      beta: float) -> np.ndarray:
    phi, psi = pair
    kappa_f, kappa_g = instanton_kappas(t, metric_nf, lam, beta)
    t2 = t * t
    return np.array([-t2 * (kappa_f * phi + phi * psi), -t2 * (kappa_g * psi + phi * phi)])


def _pair_rhs(c_f: float, c_g: float, w: float, g: float, log_variable: bool) -> Tuple[float, float]:
    if log_variable:
        return -c_f - g, -c_g * g - np.exp(2.0 * w)
    return -c_f * w - w * g, -c_g * g - w * w


def _events(ell: Optional[float], g_of: Callable, ratio_of: Callable, w_of: Optional[Callable],
            stop_on_negative: bool, stop_on_flux: bool) -> List[EventFunction]:
    """Terminal events on g < 0, g/A3 < ell^-2 and log-variable blow-up."""
    events = []
    if stop_on_negative:
        events.append(terminal_event(lambda t, y: g_of(t, y), "negative_g", direction=-1.0))
    if stop_on_flux and ell is not None:
        events.append(
            terminal_event(lambda t, y: ratio_of(t, y) - ell**-2, "flux_bound", direction=-1.0)
        )
    if w_of is not None:
        cap = np.log(DEFAULT_BLOWUP_THRESHOLD)
        events.append(terminal_event(lambda t, y: w_of(t, y) - cap, "f_blowup", direction=1.0))
    return events


def _grid(metric: MetricTrajectory, t_max: float) -> np.ndarray:
    grid = metric.t[metric.t <= t_max * (1.0 + 1e-12)]
    if grid[-1] < t_max:
        grid = np.append(grid, t_max)
    return grid


def flow_instanton(
    init: InstantonInit,
    metric: MetricTrajectory,
    t_max: Optional[float] = None,
    rel_tol: float = 1e-10,
    mode: str = COINTEGRATED,
    stop_on_negative: bool = True,
    stop_on_flux: bool = True,
    classify: bool = True,
) -> InstantonTrajectory:
    """
    Integrate (f⁺, g⁺) from the singular orbit along a metric.

    Args:
        init: Leading coefficients (f1, g1)
        metric: Metric trajectory covering [0, t_max]
        t_max: Final time, defaults to the end of the metric
        rel_tol: Relative tolerance
        mode: "cointegrated" integrates the metric alongside; "interpolated"
            replays the stored metric through a spline
        stop_on_negative: Stop once g⁺ < 0 with f⁺ != 0
        stop_on_flux: Stop once ell g⁺/A3 < 1/ell with f⁺ != 0
        classify: Attach a verdict

    Returns:
        InstantonTrajectory sampled on the metric grid
    """
    t_max = metric.t_max if t_max is None else t_max
    if t_max > metric.t_max * (1.0 + 1e-12):
        raise ValueError(f"metric ends at {metric.t_max}, cannot flow to {t_max}")
    if mode not in (COINTEGRATED, INTERPOLATED):
        raise ValueError(f"unknown mode {mode!r}")

    sign = -1.0 if init.f1 < 0.0 else 1.0
    f1, g1 = abs(init.f1), init.g1
    nonabelian = f1 != 0.0
    ell = metric.ell
    stop_neg = stop_on_negative and nonabelian
    stop_flux = stop_on_flux and nonabelian
    grid = _grid(metric, t_max)

    if stop_flux and ell is not None and 2.0 * g1 < ell**-2:
        logger.debug(f"f1={init.f1:g}, g1={g1:g}: flux bound fails at the seed")
        return _seed_only(init, metric, t_max, rel_tol, ell, classify)

    if mode == COINTEGRATED:
        traj = _flow_cointegrated(f1, g1, metric, grid, t_max, rel_tol, stop_neg, stop_flux, ell)
    else:
        traj = _flow_interpolated(f1, g1, metric, grid, t_max, rel_tol, stop_neg, stop_flux, ell)
    t, f, g, A1, A3, log_f, termination = traj

    result = InstantonTrajectory(
        init=init,
        form=mode,
        t=t,
        f=sign * f,
        g=g,
        A1=A1,
        A3=A3,
        log_f=log_f if nonabelian else None,
        termination=termination,
        t_max=t_max,
        rel_tol=rel_tol,
        ell=ell,
    )
    if classify:
        result = result.with_verdict(_safe_verdict(result, ell, t_max))
    return result


def _safe_verdict(traj: InstantonTrajectory, ell: Optional[float], t_max: float) -> Verdict:
    try:
        verdict = classify_trajectory(traj, ell, t_max)
    except UndecidedVerdict as e:
        logger.warning(f"f1={traj.init.f1:g}, g1={traj.init.g1:g} undecided at t_max={t_max:g}")
        return Verdict(kind=VerdictKind.UNDECIDED, uncertainty=e.uncertainty)
    logger.debug(f"f1={traj.init.f1:g}, g1={traj.init.g1:g}: {verdict.kind.value}")
    return verdict


def _seed_only(init: InstantonInit, metric: MetricTrajectory, t_max: float, rel_tol: float,
               ell: Optional[float], classify: bool) -> InstantonTrajectory:
    eps = 0.5 * float(metric.t[0])
    f, g = seed_instanton(init, metric, eps)
    A1, A3, _, _ = normal_form_to_metric(eps, metric.y0, metric.beta)
    traj = InstantonTrajectory(
        init=init,
        form="seed",
        t=np.array([eps]),
        f=np.array([f]),
        g=np.array([g]),
        A1=np.array([A1]),
        A3=np.array([A3]),
        log_f=np.array([np.log(abs(f))]),
        termination=Termination(kind=TerminationKind.EVENT, time=eps, event="flux_bound"),
        t_max=t_max,
        rel_tol=rel_tol,
        ell=ell,
    )
    if classify:
        traj = traj.with_verdict(Verdict.incomplete(eps, "flux_bound"))
    return traj


def _flow_cointegrated(f1, g1, metric, grid, t_max, rel_tol, stop_neg, stop_flux, ell):
    lam, beta = metric.lam, metric.beta
    log_variable = f1 != 0.0
    t_h = min(HANDOFF_FRACTION * beta, t_max)

    def phi(t, y):
        return np.concatenate(
            [normal_form_rhs(t, y[:4], lam, beta), _pair_normal_form(t, y[4:], y[:4], lam, beta)]
        )

    system = SingularSystem.from_regular_part(
        phi, np.concatenate([metric.y0, [f1, g1]]), name="metric and instanton normal form"
    )
    near_events = _events(
        ell,
        lambda t, y: y[5],
        lambda t, y: y[5] / (0.5 + t * t * y[1]),
        None,
        stop_neg,
        stop_flux,
    )
    near = solve_singular_ivp(
        system, t_h, rel_tol, abs_tol=rel_tol * 1e-2, t_eval=grid[grid < t_h], events=near_events
    )
    near.require_no_underflow()

    keep = near.times >= grid[0] * (1.0 - 1e-12)
    tn = near.times[keep]
    yn = near.states[keep]
    A1n, A3n, B1n, B3n = normal_form_to_metric(tn, yn[:, :4].T, beta)
    fn, gn = tn * yn[:, 4], tn * yn[:, 5]
    with np.errstate(divide="ignore"):
        logn = np.log(tn) + np.log(np.abs(yn[:, 4]))

    if not near.reached_end or t_h >= t_max:
        return tn, fn, gn, A1n, A3n, logn, near.termination

    th = near.final_time
    yh = near.final_state
    metric_h = np.array(normal_form_to_metric(th, yh[:4], beta))
    w_h = np.log(th * yh[4]) if log_variable else th * yh[4]
    start = np.concatenate([metric_h, [w_h, th * yh[5]]])

    def rhs(t, y):
        c_f, c_g = instanton_coefficients(y[0], y[1], y[2], y[3], lam)
        dw, dg = _pair_rhs(c_f, c_g, y[4], y[5], log_variable)
        return np.concatenate([ab_rhs(t, y[:4], lam), [dw, dg]])

    far_events = _events(
        ell,
        lambda t, y: y[5],
        lambda t, y: y[5] / y[1],
        (lambda t, y: y[4]) if log_variable else None,
        stop_neg,
        stop_flux,
    )
    far = integrate_adaptive(
        rhs, start, th, t_max, rel_tol, rel_tol * 1e-2, t_eval=grid, events=far_events
    )
    tf = far.times[1:]
    yf = far.states[1:]
    w = yf[:, 4]
    ff = np.exp(w) if log_variable else w
    logf = w if log_variable else np.full_like(w, -np.inf)
    return (
        np.concatenate([tn, tf]),
        np.concatenate([fn, ff]),
        np.concatenate([gn, yf[:, 5]]),
        np.concatenate([A1n, yf[:, 0]]),
        np.concatenate([A3n, yf[:, 1]]),
        np.concatenate([logn, logf]),
        far.termination,
    )


def _flow_interpolated(f1, g1, metric, grid, t_max, rel_tol, stop_neg, stop_flux, ell):
    interp = MetricInterpolant(metric)
    lam, beta = metric.lam, metric.beta
    log_variable = f1 != 0.0
    t_h = min(HANDOFF_FRACTION * beta, t_max)
    eps = 0.5 * float(metric.t[0])

    def near_rhs(t, y):
        return _pair_normal_form(t, y, interp.normal_form(t), lam, beta) / t

    seed = seed_instanton(InstantonInit(f1=f1, g1=g1), metric, eps) / eps
    near_events = _events(
        ell,
        lambda t, y: y[1],
        lambda t, y: y[1] / (0.5 + t * t * interp.normal_form(t)[1]),
        None,
        stop_neg,
        stop_flux,
    )
    near = integrate_adaptive(
        near_rhs, seed, eps, t_h, rel_tol, rel_tol * 1e-2, t_eval=grid, events=near_events
    )
    near.require_no_underflow()
    keep = near.times >= grid[0] * (1.0 - 1e-12)
    tn = near.times[keep]
    yn = near.states[keep]
    A1n, A3n, _, _ = interp(tn)
    fn, gn = tn * yn[:, 0], tn * yn[:, 1]
    with np.errstate(divide="ignore"):
        logn = np.log(tn) + np.log(np.abs(yn[:, 0]))

    if not near.reached_end or t_h >= t_max:
        return tn, fn, gn, A1n, A3n, logn, near.termination

    th = near.final_time
    yh = near.final_state
    w_h = np.log(th * yh[0]) if log_variable else th * yh[0]
    start = np.array([w_h, th * yh[1]])

    def rhs(t, y):
        A1, A3, B1, B3 = interp(min(t, interp.t_last))
        c_f, c_g = instanton_coefficients(A1, A3, B1, B3, lam)
        return np.array(_pair_rhs(c_f, c_g, y[0], y[1], log_variable))

    far_events = _events(
        ell,
        lambda t, y: y[1],
        lambda t, y: y[1] / interp(min(t, interp.t_last))[1],
        (lambda t, y: y[0]) if log_variable else None,
        stop_neg,
        stop_flux,
    )
    far = integrate_adaptive(
        rhs, start, th, t_max, rel_tol, rel_tol * 1e-2, t_eval=grid, events=far_events
    )
    tf = far.times[1:]
    yf = far.states[1:]
    A1f, A3f, _, _ = interp(np.minimum(tf, interp.t_last))
    w = yf[:, 0]
    ff = np.exp(w) if log_variable else w
    logf = w if log_variable else np.full_like(w, -np.inf)
    return (
        np.concatenate([tn, tf]),
        np.concatenate([fn, ff]),
        np.concatenate([gn, yf[:, 1]]),
        np.concatenate([A1n, A1f]),
        np.concatenate([A3n, A3f]),
        np.concatenate([logn, logf]),
        far.termination,
    )


def abelian_solution(g1: float, metric: MetricTrajectory) -> InstantonTrajectory:
    """
    The explicit solution f⁺ = 0, g⁺ = 2 g1 A3.

    Its limit is G_inf = 2 g1 ell; g1 = ell^-2/2 gives the abelian solution
    on the boundary of the complete region.
    """
    init = InstantonInit(f1=0.0, g1=g1)
    g = 2.0 * g1 * metric.A3
    verdict = Verdict.abelian(2.0 * g1 * metric.ell if metric.ell is not None else None)
    return InstantonTrajectory(
        init=init,
        form="abelian",
        t=metric.t.copy(),
        f=np.zeros_like(metric.t),
        g=g,
        A1=metric.A1.copy(),
        A3=metric.A3.copy(),
        termination=Termination(kind=TerminationKind.REACHED_END, time=metric.t_max),
        t_max=metric.t_max,
        rel_tol=metric.rel_tol,
        ell=metric.ell,
        verdict=verdict,
    )


def abelian_residual(g1: float, metric: MetricTrajectory) -> float:
    """Largest residual of g' = -c_g g - f^2 along (0, 2 g1 A3), using A3' from the flow."""
    dA3 = ab_rhs(0.0, np.vstack([metric.A1, metric.A3, metric.B1, metric.B3]), metric.lam)[1]
    _, c_g = instanton_coefficients(metric.A1, metric.A3, metric.B1, metric.B3, metric.lam)
    g = 2.0 * g1 * metric.A3
    return float(np.max(np.abs(2.0 * g1 * dA3 + c_g * g)))


def integrate_FG(init: InstantonInit, metric: MetricTrajectory, t_max: Optional[float] = None,
                 rel_tol: float = 1e-10) -> InstantonTrajectory:
    """
    Integrate F⁺ = A1 f⁺ and G⁺ = A3 g⁺ directly.

    Near the singular orbit F = t^2 F~, G = t^2 G~ with (F~, G~)(0) = (f1, g1)/2;
    further out
    F' = F((1 - G)/A3 - lam^2 A1/(B1 B3)),
    G' = (A3/A1^2)((1 - lam^2 A1^2/B1^2) G - F^2).

    Returns:
        InstantonTrajectory with ``form == "FG"`` and no verdict
    """
    t_max = metric.t_max if t_max is None else t_max
    lam, beta = metric.lam, metric.beta
    grid = _grid(metric, t_max)
    t_h = min(HANDOFF_FRACTION * beta, t_max)
    l2 = lam * lam

    def phi(t, y):
        a1, a3, b1, b3, Fn, Gn = y
        t2 = t * t
        al1 = 0.5 + t2 * a1
        al3 = 0.5 + t2 * a3
        B1 = beta + t2 * b1
        B3 = beta + t2 * b3
        dF = -t2 * Fn * ((2.0 * a3 + Gn) / al3 + l2 * al1 / (B1 * B3))
        dG = -t2 * (
            Gn * (2.0 * a1 - a3 + 2.0 * t2 * a1 * a1) / al1**2
            + l2 * al3 * Gn / B1**2
            + al3 * Fn * Fn / al1**2
        )
        return np.concatenate([normal_form_rhs(t, y[:4], lam, beta), [dF, dG]])

    system = SingularSystem.from_regular_part(
        phi, np.concatenate([metric.y0, [0.5 * init.f1, 0.5 * init.g1]]), name="F/G normal form"
    )
    near = solve_singular_ivp(system, t_h, rel_tol, abs_tol=rel_tol * 1e-2, t_eval=grid[grid < t_h])
    near.require_no_underflow()
    keep = near.times >= grid[0] * (1.0 - 1e-12)
    tn = near.times[keep]
    yn = near.states[keep]
    A1n, A3n, _, _ = normal_form_to_metric(tn, yn[:, :4].T, beta)
    Fn, Gn = tn**2 * yn[:, 4], tn**2 * yn[:, 5]
    t_all, F_all, G_all, A1_all, A3_all = tn, Fn, Gn, A1n, A3n
    termination = near.termination

    if near.reached_end and t_h < t_max:
        th = near.final_time
        yh = near.final_state
        start = np.concatenate(
            [normal_form_to_metric(th, yh[:4], beta), [th**2 * yh[4], th**2 * yh[5]]]
        )

        def rhs(t, y):
            A1, A3, B1, B3, F, G = y
            dF = F * ((1.0 - G) / A3 - l2 * A1 / (B1 * B3))
            dG = (A3 / A1**2) * ((1.0 - l2 * A1**2 / B1**2) * G - F * F)
            return np.concatenate([ab_rhs(t, y[:4], lam), [dF, dG]])

        far = integrate_adaptive(rhs, start, th, t_max, rel_tol, rel_tol * 1e-2, t_eval=grid)
        yf = far.states[1:]
        t_all = np.concatenate([tn, far.times[1:]])
        F_all = np.concatenate([Fn, yf[:, 4]])
        G_all = np.concatenate([Gn, yf[:, 5]])
        A1_all = np.concatenate([A1n, yf[:, 0]])
        A3_all = np.concatenate([A3n, yf[:, 1]])
        termination = far.termination

    f = F_all / A1_all
    with np.errstate(divide="ignore"):
        log_f = np.log(np.abs(f))
    return InstantonTrajectory(
        init=init,
        form="FG",
        t=t_all,
        f=f,
        g=G_all / A3_all,
        A1=A1_all,
        A3=A3_all,
        log_f=log_f if init.f1 != 0.0 else None,
        termination=termination,
        t_max=t_max,
        rel_tol=rel_tol,
        ell=metric.ell,
    )


def full_system_coefficients(a, b, adot, bdot, p):
    """
    Linear coefficients (c1, c2, c3, c4) of the four-function system.

    f⁺' = c1 f⁺ + f⁻ g⁻ - f⁺ g⁺, f⁻' = c2 f⁻ + f⁺ g⁻ + f⁻ g⁺,
    g⁺' = c3 g⁺ + f⁻^2 - f⁺^2, g⁻' = c4 g⁻ + 2 f⁺ f⁻.
    """
    bp = b + p
    bm = b - p
    s = 4.0 * a * a - bp * bp
    d = bm * s
    c1 = (adot * (s - 2.0 * a * bm) - bdot * (a - b) * (2.0 * a + bp)) / d
    c2 = (adot * (s + 2.0 * a * bm) + bdot * (a + b) * (2.0 * a - bp)) / d
    c3 = bdot * bp / s
    c4 = -(4.0 * a * adot * bp + bdot * s) / d
    return c1, c2, c3, c4


def flow_full_instanton(
    f1p: float,
    f1m: float,
    g1p: float,
    g1m: float,
    metric: MetricTrajectory,
    t_max: Optional[float] = None,
    rel_tol: float = 1e-10,
) -> FullInstantonTrajectory:
    """
    Integrate the four-function system in Hitchin variables.

    The plus sector starts from the reduced flow with leading coefficients
    (f1p, g1p). The minus sector starts from its leading terms f⁻ = f1m t,
    g⁻ = g1m t. The system is integrated from the first metric sample past
    the normal-form region. Only f1m = g1m = 0 extends smoothly over the
    singular orbit.

    Args:
        f1p, f1m, g1p, g1m: Leading coefficients of f⁺, f⁻, g⁺, g⁻
        metric: Unscaled metric trajectory with Hitchin variables
        t_max: Final time
        rel_tol: Relative tolerance

    Returns:
        FullInstantonTrajectory on the metric grid
    """
    if not metric.has_hitchin:
        raise ValueError("the four-function system needs Hitchin variables")
    t_max = metric.t_max if t_max is None else t_max
    p = metric.p
    i0 = int(np.searchsorted(metric.t, HANDOFF_FRACTION * metric.beta))
    t0 = float(metric.t[i0])
    if t0 >= t_max:
        raise ValueError(f"t_max={t_max} does not reach the start time {t0}")

    plus = flow_instanton(
        InstantonInit(f1=f1p, g1=g1p),
        metric,
        t_max=t0,
        rel_tol=rel_tol,
        stop_on_negative=False,
        stop_on_flux=False,
        classify=False,
    )
    adot0, bdot0 = metric.adot[i0], metric.bdot[i0]
    start = np.array(
        [
            adot0 * bdot0,
            adot0 * adot0,
            metric.a[i0],
            metric.b[i0],
            plus.f[-1],
            f1m * t0,
            plus.g[-1],
            g1m * t0,
        ]
    )

    def rhs(t, y):
        x1, x2, a, b, fp, fm, gp, gm = y
        root = np.sqrt(x2)
        c1, c2, c3, c4 = full_system_coefficients(a, b, root, x1 / root, p)
        return np.concatenate(
            [
                hitchin_rhs(t, y[:4], p),
                [
                    c1 * fp + fm * gm - fp * gp,
                    c2 * fm + fp * gm + fm * gp,
                    c3 * gp + fm * fm - fp * fp,
                    c4 * gm + 2.0 * fp * fm,
                ],
            ]
        )

    grid = _grid(metric, t_max)
    threshold = max(DEFAULT_BLOWUP_THRESHOLD, 10.0 * t_max**3)
    traj = integrate_adaptive(
        rhs, start, t0, t_max, rel_tol, rel_tol * 1e-2, t_eval=grid, blowup_threshold=threshold
    )
    states = traj.states
    return FullInstantonTrajectory(
        t=traj.times,
        f_plus=states[:, 4],
        f_minus=states[:, 5],
        g_plus=states[:, 6],
        g_minus=states[:, 7],
        termination=traj.termination,
        t_start=t0,
    )

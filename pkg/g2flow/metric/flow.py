"""Integration of B7 metrics from the singular orbit outwards.

Every flow starts in normal-form variables A_i = t(1/2 + t^2 a_i),
B_i = beta + t^2 b_i, where the singular orbit is a regular singular point,
and hands off to either the Hitchin (x, y) system or the orbit-coefficient
system once t reaches a fixed fraction of beta.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from ..core.errors import BadBracket, FitUnstable, FormMismatch, IncompleteMetric
from ..core.fitting import final_window, power_law_exponent, richardson_limit
from ..core.integrator import (
    DEFAULT_BLOWUP_THRESHOLD,
    Termination,
    Trajectory,
    integrate_adaptive,
    sample_grid,
)
from ..core.singular import SingularSystem, solve_singular_ivp
from .b7 import (
    B7Params,
    FamilyKind,
    MetricSample,
    ab_from_metric,
    ab_rhs,
    eval_H_coefficients,
    hitchin_rhs,
    hitchin_second_derivatives,
    instanton_coefficients,
    metric_from_ab,
    normal_form_fixed_point,
    normal_form_rhs,
    normal_form_to_metric,
    normal_form_to_offsets,
    seed_metric,
)

logger = logging.getLogger(__name__)

HANDOFF_FRACTION = 0.25
FIRST_SAMPLE_FRACTION = 0.005
ELL_FIT_TOL = 1e-3
INEQUALITY_TOL = 1e-5
SEED_CHECK_TOL = 1e-5

METRIC_COLUMNS = ["t", "a", "b", "adot", "bdot", "A1", "A3", "B1", "B3", "H"]


class MetricTrajectory(BaseModel):
    """Sampled metric flow.

    ``lam`` is the collapse parameter of the dressed system (1 for an
    ordinary family member) and ``beta`` the value of B1 = B3 at t = 0.
    Hitchin arrays are present only for unscaled flows.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    params: Optional[B7Params] = None
    form: str
    lam: float = 1.0
    beta: float
    y0: np.ndarray
    t: np.ndarray
    A1: np.ndarray
    A3: np.ndarray
    B1: np.ndarray
    B3: np.ndarray
    a: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    adot: Optional[np.ndarray] = None
    bdot: Optional[np.ndarray] = None
    termination: Termination
    t_max: float
    rel_tol: float
    ell: Optional[float] = None
    fit_err: Optional[float] = None

    @property
    def p(self) -> Optional[float]:
        return self.params.p if self.params is not None and self.lam == 1.0 else None

    @property
    def has_hitchin(self) -> bool:
        return self.a is not None

    def __len__(self) -> int:
        return int(self.t.size)

    def sample(self, i: int) -> MetricSample:
        if self.has_hitchin:
            return MetricSample(
                t=self.t[i], A1=self.A1[i], A3=self.A3[i], B1=self.B1[i], B3=self.B3[i],
                a=self.a[i], b=self.b[i], adot=self.adot[i], bdot=self.bdot[i], p=self.p,
            )
        return MetricSample(
            t=self.t[i], A1=self.A1[i], A3=self.A3[i], B1=self.B1[i], B3=self.B3[i]
        )

    @property
    def samples(self) -> List[MetricSample]:
        return [self.sample(i) for i in range(len(self))]

    def H(self) -> np.ndarray:
        """H along the trajectory (orbit-coefficient form)."""
        return eval_H_coefficients(self.A1, self.A3, self.B1, self.B3)

    def rows(self) -> List[tuple]:
        """Table rows in METRIC_COLUMNS order; needs Hitchin variables."""
        if not self.has_hitchin:
            raise ValueError("metric table rows need Hitchin variables")
        H = self.H()
        return [
            (self.t[i], self.a[i], self.b[i], self.adot[i], self.bdot[i],
             self.A1[i], self.A3[i], self.B1[i], self.B3[i], H[i])
            for i in range(len(self))
        ]

    def sidecar(self) -> dict:
        """Provenance fields stored next to the metric table."""
        params = self.params
        return {
            "r0": params.r0 if params is not None else None,
            "abar": params.abar if params is not None else None,
            "bbar": params.bbar if params is not None else None,
            "ell": self.ell,
            "fit_err": self.fit_err,
            "t_max": self.t_max,
            "rel_tol": self.rel_tol,
        }

    def with_ell(self, ell: Optional[float], fit_err: Optional[float]) -> "MetricTrajectory":
        return self.model_copy(update={"ell": ell, "fit_err": fit_err})


def metric_grid(beta: float, t_max: float, per_decade: int = 200) -> np.ndarray:
    """Default sample grid for a flow whose singular orbit has size beta."""
    return sample_grid(FIRST_SAMPLE_FRACTION * beta, t_max, per_decade, max_spacing=0.5 * beta)


def _singular_phase(y0: np.ndarray, lam: float, beta: float, t_handoff: float,
                    rel_tol: float, grid: np.ndarray) -> Trajectory:
    system = SingularSystem.from_regular_part(
        lambda t, y: normal_form_rhs(t, y, lam, beta), y0, name="metric normal form"
    )
    phase = solve_singular_ivp(
        system, t_handoff, rel_tol, abs_tol=rel_tol * 1e-2, t_eval=grid[grid < t_handoff]
    )
    phase.require_no_underflow()
    if not phase.reached_end:
        raise IncompleteMetric(
            "metric left the normal-form region before hand-off",
            time=phase.termination.time,
        )
    return phase


def _keep_grid(times: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return times >= grid[0] * (1.0 - 1e-12)


def _finalise(traj: MetricTrajectory, check: bool) -> MetricTrajectory:
    try:
        ell, fit_err = estimate_ell(traj)
    except FitUnstable as e:
        is_ac = traj.params is not None and traj.params.kind == FamilyKind.AC
        level = logging.INFO if is_ac else logging.WARNING
        logger.log(level, f"no fibre length for this flow: {e}")
        ell, fit_err = None, e.fit_err
    traj = traj.with_ell(ell, fit_err)
    if ell is not None:
        logger.info(f"{traj.form} flow to t={traj.t_max:g}: ell={ell:.10g} (fit_err {fit_err:.2e})")
    if check and traj.params is not None and traj.params.kind == FamilyKind.ALC and traj.has_hitchin:
        report = check_inequalities(traj)
        if report.violations:
            worst = min(report.violations, key=lambda k: report.margins[k])
            raise IncompleteMetric(
                f"family inequalities fail: {', '.join(report.violations)}",
                time=report.first_violation_time.get(worst, traj.t_max),
                margins=report.margins,
            )
    return traj


def check_seed(params: B7Params, t: float, da: float, db: float,
               tol: float = SEED_CHECK_TOL) -> float:
    """
    Compare integrated offsets (a - p, b - p) with the t^4 series.

    Args:
        params: Family member
        t: Sample time near the singular orbit
        da, db: Integrated a - p and b - p at t
        tol: Allowed deviation in units of r0 t^2/4

    Returns:
        The deviation in units of r0 t^2/4

    Raises:
        FormMismatch: If the deviation exceeds tol
    """
    seed = seed_metric(params, t)
    scale = 0.25 * params.r0 * t * t
    deviation = max(abs(da - (seed.a - seed.p)), abs(db - (seed.b - seed.p))) / scale
    if deviation > tol:
        raise FormMismatch(
            f"flow leaves the series at t={t:g}: deviation {deviation:.2e} > {tol:.0e}",
            values=(float(da), float(seed.a - seed.p)),
        )
    return deviation


def flow_metric(params: B7Params, t_max: float = 400.0, rel_tol: float = 1e-10,
                per_decade: int = 200, check: bool = True,
                blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD) -> MetricTrajectory:
    """
    Integrate a family member in Hitchin variables.

    Args:
        params: Family member
        t_max: Final time
        rel_tol: Relative tolerance
        per_decade: Sample density of the geometric part of the grid
        blowup_threshold: Sup-norm threshold of the Hitchin phase, raised to 10 t_max^3 if smaller
        check: Verify the family inequalities along the flow

    Returns:
        MetricTrajectory with Hitchin and orbit-coefficient samples

    Raises:
        IncompleteMetric: If the flow stops early or the inequalities fail
    """
    if params.kind == FamilyKind.INCOMPLETE:
        logger.warning(f"64*abar*r0 = {64 * params.abar * params.r0:.6g} < 1/3: flow is not complete")
    beta, p = 2.0 * params.r0, params.p
    grid = metric_grid(beta, t_max, per_decade)
    y0 = normal_form_fixed_point(params.normal_form_a3(), 1.0, beta)
    t_h = HANDOFF_FRACTION * beta
    phase = _singular_phase(y0, 1.0, beta, t_h, rel_tol, grid)

    keep = _keep_grid(phase.times, grid)
    t1 = phase.times[keep]
    ys = phase.states[keep].T
    A1, A3, B1, B3 = normal_form_to_metric(t1, ys, beta)
    da, db = normal_form_to_offsets(t1, ys, beta)
    deviation = check_seed(params, float(t1[0]), float(da[0]), float(db[0]),
                           tol=max(SEED_CHECK_TOL, 1e3 * rel_tol))
    logger.debug(f"first sample t={t1[0]:g} matches the series to {deviation:.2e}")
    adot = db / A3
    bdot = A3 * B3 / 2.0

    # hand-off state in Hitchin variables
    yh = phase.final_state
    A1h, A3h, B1h, B3h = normal_form_to_metric(t_h, yh, beta)
    dah, dbh = normal_form_to_offsets(t_h, yh, beta)
    adh, bdh = dbh / A3h, A3h * B3h / 2.0
    start = np.array([adh * bdh, adh * adh, p + dah, p + dbh])

    threshold = max(blowup_threshold, 10.0 * t_max**3)
    outer = integrate_adaptive(
        lambda t, y: hitchin_rhs(t, y, p), start, t_h, t_max, rel_tol, rel_tol * 1e-2,
        t_eval=grid, blowup_threshold=threshold,
    )
    outer.require_no_underflow()
    if not outer.reached_end:
        raise IncompleteMetric("Hitchin flow terminated early", time=outer.termination.time)

    t2 = outer.times[1:]
    x1, x2, a2, b2 = outer.states[1:].T
    ad2 = np.sqrt(x2)
    bd2 = x1 / ad2
    A1b, A3b, B1b, B3b = metric_from_ab(a2, b2, ad2, bd2, p)

    traj = MetricTrajectory(
        params=params,
        form="hitchin",
        beta=beta,
        y0=y0,
        t=np.concatenate([t1, t2]),
        A1=np.concatenate([A1, A1b]),
        A3=np.concatenate([A3, A3b]),
        B1=np.concatenate([B1, B1b]),
        B3=np.concatenate([B3, B3b]),
        a=np.concatenate([p + da, a2]),
        b=np.concatenate([p + db, b2]),
        adot=np.concatenate([adot, ad2]),
        bdot=np.concatenate([bdot, bd2]),
        termination=outer.termination,
        t_max=t_max,
        rel_tol=rel_tol,
    )
    return _finalise(traj, check)


def _flow_coefficients(params: Optional[B7Params], a3: float, lam: float, beta: float,
                       t_max: float, rel_tol: float, per_decade: int, form: str) -> MetricTrajectory:
    grid = metric_grid(beta, t_max, per_decade)
    y0 = normal_form_fixed_point(a3, lam, beta)
    t_h = HANDOFF_FRACTION * beta
    phase = _singular_phase(y0, lam, beta, t_h, rel_tol, grid)

    keep = _keep_grid(phase.times, grid)
    t1 = phase.times[keep]
    inner = np.vstack(normal_form_to_metric(t1, phase.states[keep].T, beta))
    start = np.array(normal_form_to_metric(t_h, phase.final_state, beta))

    outer = integrate_adaptive(
        lambda t, y: ab_rhs(t, y, lam), start, t_h, t_max, rel_tol, rel_tol * 1e-2, t_eval=grid
    )
    outer.require_no_underflow()
    if not outer.reached_end:
        raise IncompleteMetric("orbit-coefficient flow terminated early", time=outer.termination.time)
    coeffs = np.hstack([inner, outer.states[1:].T])

    hitchin: Dict[str, Optional[np.ndarray]] = {"a": None, "b": None, "adot": None, "bdot": None}
    if params is not None and lam == 1.0:
        p = params.p
        da, db = normal_form_to_offsets(t1, phase.states[keep].T, beta)
        a_in, b_in = p + da, p + db
        a_out, b_out, ad_out, bd_out = ab_from_metric(*outer.states[1:].T, p)
        hitchin = {
            "a": np.concatenate([a_in, a_out]),
            "b": np.concatenate([b_in, b_out]),
            "adot": np.concatenate([db / inner[1], ad_out]),
            "bdot": np.concatenate([inner[1] * inner[3] / 2.0, bd_out]),
        }

    return MetricTrajectory(
        params=params,
        form=form,
        lam=lam,
        beta=beta,
        y0=y0,
        t=np.concatenate([t1, outer.times[1:]]),
        A1=coeffs[0],
        A3=coeffs[1],
        B1=coeffs[2],
        B3=coeffs[3],
        termination=outer.termination,
        t_max=t_max,
        rel_tol=rel_tol,
        **hitchin,
    )


def flow_metric_ABform(params: B7Params, t_max: float = 400.0, rel_tol: float = 1e-10,
                       per_decade: int = 200, check: bool = True) -> MetricTrajectory:
    """Integrate a family member directly in orbit coefficients."""
    beta = 2.0 * params.r0
    traj = _flow_coefficients(
        params, params.normal_form_a3(), 1.0, beta, t_max, rel_tol, per_decade, "ab"
    )
    return _finalise(traj, check)


def flow_metric_rescaled(a3: float, lam: float, t_max: float, rel_tol: float = 1e-10,
                         params: Optional[B7Params] = None,
                         per_decade: int = 200) -> MetricTrajectory:
    """
    Integrate the collapse-dressed flow with B_i(0) = 2.

    Args:
        a3: t^3 coefficient of A3 at t = 0, held fixed along the collapse
        lam: Collapse parameter (0 gives Taub-NUT times a round sphere)
        t_max: Final time
        rel_tol: Relative tolerance
        params: Family member the flow belongs to, if any
        per_decade: Sample density

    Returns:
        MetricTrajectory with ``form == "rescaled"``
    """
    if lam < 0.0:
        raise ValueError(f"collapse parameter must be non-negative, got {lam}")
    traj = _flow_coefficients(params, a3, lam, 2.0, t_max, rel_tol, per_decade, "rescaled")
    return _finalise(traj, check=False)


def estimate_ell(traj: MetricTrajectory) -> Tuple[float, float]:
    """
    Fibre length as the extrapolated limit of A3.

    Returns:
        (ell, fit_err)

    Raises:
        FitUnstable: If the extrapolation error exceeds 1e-3 * ell
    """
    mask = final_window(traj.t)
    if mask.sum() < 8:
        raise FitUnstable("too few samples in the final decade")
    ell, fit_err = richardson_limit(traj.t[mask], traj.A3[mask], order=3)
    if not ell > 0.0 or fit_err > ELL_FIT_TOL * abs(ell):
        raise FitUnstable(f"A3 does not settle: limit {ell:.6g} +- {fit_err:.2e}", fit_err=fit_err)
    return ell, fit_err


def estimate_ell_cubic(traj: MetricTrajectory) -> Tuple[float, float]:
    """Fibre length as the limit of (2 b^3 / (3 a^2))^(1/3)."""
    if not traj.has_hitchin:
        raise ValueError("cubic estimate needs Hitchin variables")
    mask = final_window(traj.t)
    values = np.cbrt(2.0 * traj.b[mask] ** 3 / (3.0 * traj.a[mask] ** 2))
    ell, fit_err = richardson_limit(traj.t[mask], values, order=3)
    if fit_err > ELL_FIT_TOL * abs(ell):
        raise FitUnstable(f"cubic estimate does not settle: {ell:.6g} +- {fit_err:.2e}", fit_err=fit_err)
    return ell, fit_err


class InequalityReport(BaseModel):
    """Smallest margin of each family inequality along a flow."""

    margins: Dict[str, float]
    first_violation_time: Dict[str, float]
    violations: List[str]


def check_inequalities(traj: MetricTrajectory, tol: float = INEQUALITY_TOL) -> InequalityReport:
    """
    Margins of b > p, b' > 0, a/b > 1, a'/b' > a/b, a''/b'' > a'/b', H > 0
    and positivity of the orbit metric.

    Ratio inequalities use a relative tolerance; a margin below -tol is a
    violation.
    """
    if not traj.has_hitchin:
        raise ValueError("inequalities need Hitchin variables")
    p = traj.p
    a, b, ad, bd = traj.a, traj.b, traj.adot, traj.bdot
    second = np.array(
        [hitchin_second_derivatives(np.array([x, y, u, v]), p)
         for x, y, u, v in zip(ad * bd, ad * ad, a, b)]
    )
    add, bdd = second[:, 0], second[:, 1]
    squares = np.min(np.vstack([traj.A1**2, traj.A3**2, traj.B1**2, traj.B3**2]), axis=0)
    h = traj.H()

    series = {
        "b_minus_p": (b - p) / p,
        "bdot": bd,
        "a_over_b": a / b - 1.0,
        "velocity_ratio": (ad / bd) / (a / b) - 1.0,
        "acceleration_ratio": (add / bdd) / (ad / bd) - 1.0,
        "H": h,
        "metric_positivity": squares,
    }
    margins: Dict[str, float] = {}
    first: Dict[str, float] = {}
    violations: List[str] = []
    for name, values in series.items():
        margins[name] = float(np.min(values))
        bad = values < -tol
        if np.any(bad):
            violations.append(name)
            first[name] = float(traj.t[np.argmax(bad)])
    for name in violations:
        logger.warning(f"inequality {name} violated from t={first[name]:.6g} (margin {margins[name]:.3e})")
    return InequalityReport(margins=margins, first_violation_time=first, violations=violations)


class AsymptoticReport(BaseModel):
    """Large-t behaviour of the instanton coefficients."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    c_g_exponent: float
    c_f_exponent: float


def asymptotic_remainders(traj: MetricTrajectory, ell: Optional[float] = None) -> AsymptoticReport:
    """
    Remainders of c_g ~ -(9/2) ell^2 t^-3 and c_f ~ -1/ell + (5/2)/t.

    gamma1 = t^4 (c_g + 4.5 ell^2 t^-3) and gamma2 = t^2 (c_f + 1/ell - 2.5/t)
    on the final decade, plus the fitted decay exponents of c_g and c_f + 1/ell.
    """
    ell = ell if ell is not None else traj.ell
    if ell is None:
        raise ValueError("fibre length unknown")
    mask = final_window(traj.t)
    t = traj.t[mask]
    c_f, c_g = instanton_coefficients(traj.A1[mask], traj.A3[mask], traj.B1[mask], traj.B3[mask], traj.lam)
    gamma1 = t**4 * (c_g + 4.5 * ell**2 / t**3)
    gamma2 = t**2 * (c_f + 1.0 / ell - 2.5 / t)
    return AsymptoticReport(
        t=t,
        gamma1=gamma1,
        gamma2=gamma2,
        c_g_exponent=power_law_exponent(t, c_g),
        c_f_exponent=power_law_exponent(t, c_f + 1.0 / ell),
    )


class MetricInterpolant:
    """Evaluate (A1, A3, B1, B3) anywhere in (0, t_max] of a stored flow."""

    def __init__(self, traj: MetricTrajectory):
        """
        Build splines in log t of log(A_i/t) and log B_i.

        Args:
            traj: Stored metric trajectory
        """
        self.traj = traj
        self.lam = traj.lam
        self.beta = traj.beta
        self.t_first = float(traj.t[0])
        self.t_last = float(traj.t[-1])
        x = np.log(traj.t)
        self._splines = [
            CubicSpline(x, np.log(traj.A1 / traj.t)),
            CubicSpline(x, np.log(traj.A3 / traj.t)),
            CubicSpline(x, np.log(traj.B1)),
            CubicSpline(x, np.log(traj.B3)),
        ]
        # normal-form values at the first sample, for t below it
        t1 = self.t_first
        self._y0 = np.asarray(traj.y0, dtype=float)
        self._y1 = np.array(
            [
                (traj.A1[0] / t1 - 0.5) / t1**2,
                (traj.A3[0] / t1 - 0.5) / t1**2,
                (traj.B1[0] - self.beta) / t1**2,
                (traj.B3[0] - self.beta) / t1**2,
            ]
        )

    def __call__(self, t):
        """Return (A1, A3, B1, B3) at t (scalar or array)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t_arr <= 0.0) or np.any(t_arr > self.t_last * (1.0 + 1e-12)):
            raise ValueError(f"t outside (0, {self.t_last}]")
        out = np.empty((4, t_arr.size))
        low = t_arr < self.t_first
        if np.any(low):
            tl = t_arr[low]
            w = (tl / self.t_first) ** 2
            y = self._y0[:, None] + (self._y1 - self._y0)[:, None] * w[None, :]
            out[:, low] = np.vstack(normal_form_to_metric(tl, y, self.beta))
        high = ~low
        if np.any(high):
            th = t_arr[high]
            x = np.log(th)
            out[0, high] = th * np.exp(self._splines[0](x))
            out[1, high] = th * np.exp(self._splines[1](x))
            out[2, high] = np.exp(self._splines[2](x))
            out[3, high] = np.exp(self._splines[3](x))
        if np.ndim(t) == 0:
            return tuple(float(v) for v in out[:, 0])
        return tuple(out)

    def normal_form(self, t: float) -> np.ndarray:
        """Normal-form values (a1, a3, b1, b3) at 0 <= t <= t_max."""
        if t == 0.0:
            return self._y0.copy()
        if t < self.t_first:
            w = (t / self.t_first) ** 2
            return self._y0 + (self._y1 - self._y0) * w
        A1, A3, B1, B3 = self(t)
        t2 = t * t
        return np.array(
            [(A1 / t - 0.5) / t2, (A3 / t - 0.5) / t2, (B1 - self.beta) / t2, (B3 - self.beta) / t2]
        )


def rescale_trajectory(traj: MetricTrajectory, lam: float) -> MetricTrajectory:
    """
    Apply the scaling symmetry A_i(t) -> A_i(lam t)/lam, B_i(t) -> B_i(lam t)/lam.

    Family data transform as r0 -> r0/lam, (abar, bbar) -> lam*(abar, bbar).
    """
    if lam <= 0.0:
        raise ValueError(f"scale must be positive, got {lam}")
    params = None
    if traj.params is not None:
        params = B7Params(
            r0=traj.params.r0 / lam, abar=traj.params.abar * lam, bbar=traj.params.bbar * lam
        )
    y0 = np.asarray(traj.y0) * np.array([lam**2, lam**2, lam, lam])
    update = {
        "params": params,
        "beta": traj.beta / lam,
        "y0": y0,
        "t": traj.t / lam,
        "A1": traj.A1 / lam,
        "A3": traj.A3 / lam,
        "B1": traj.B1 / lam,
        "B3": traj.B3 / lam,
        "t_max": traj.t_max / lam,
        "termination": traj.termination.model_copy(update={"time": traj.termination.time / lam}),
        "ell": traj.ell / lam if traj.ell is not None else None,
        "fit_err": traj.fit_err / lam if traj.fit_err is not None else None,
    }
    if traj.has_hitchin:
        update.update(
            a=traj.a / lam**3, b=traj.b / lam**3, adot=traj.adot / lam**2, bdot=traj.bdot / lam**2
        )
    return traj.model_copy(update=update)


def extend_metric(traj: MetricTrajectory, t_max: float) -> MetricTrajectory:
    """Re-run the flow that produced traj out to a later final time."""
    if t_max <= traj.t_max:
        return traj
    logger.debug(f"extending {traj.form} flow from t={traj.t_max:g} to t={t_max:g}")
    if traj.form == "rescaled":
        return flow_metric_rescaled(
            float(traj.y0[1]), traj.lam, t_max, traj.rel_tol, params=traj.params
        )
    if traj.params is None:
        raise ValueError("cannot extend a flow without family data")
    if traj.form == "ab":
        return flow_metric_ABform(traj.params, t_max, traj.rel_tol, check=False)
    return flow_metric(traj.params, t_max, traj.rel_tol, check=False)


def member_with_ell(r0: float, ell_target: float, t_max: float = 400.0, rel_tol: float = 1e-9,
                    x_range: Tuple[float, float] = (1.0 / 3.0 + 1e-3, 20.0),
                    xtol: float = 1e-8) -> B7Params:
    """
    Family member of scale r0 with fibre length ell_target.

    The search runs over x = 64 abar r0 at r0 = 1 and uses ell(r0) = r0 ell(1).

    Raises:
        BadBracket: If ell_target / r0 is outside the range spanned by x_range
    """
    target = ell_target / r0

    def mismatch(log_x: float) -> float:
        params = B7Params.from_r0_abar(1.0, float(np.exp(log_x)) / 64.0)
        traj = flow_metric(params, t_max, rel_tol, per_decade=50, check=False)
        if traj.ell is None:
            raise FitUnstable(f"no fibre length at x={np.exp(log_x):.6g}")
        return traj.ell - target

    lo, hi = np.log(x_range[0]), np.log(x_range[1])
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo * f_hi > 0.0:
        raise BadBracket(
            f"ell/r0 = {target:.6g} not between {f_lo + target:.6g} and {f_hi + target:.6g}",
            bracket=x_range,
        )
    log_x = brentq(mismatch, lo, hi, xtol=xtol)
    x = float(np.exp(log_x))
    logger.info(f"ell={ell_target:g} at r0={r0:g}: 64*abar*r0={x:.10g}")
    return B7Params.from_r0_abar(r0, x / (64.0 * r0))

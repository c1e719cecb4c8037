"""Solutions near the end of the manifold, and shooting back to the singular orbit.

Writing f⁺ = t^(-5/2) exp((1/ell - G_inf) t) X and
g⁺ = G_inf - t^-2 (9 ell^2 G_inf/4 + Y) in s = 1/t turns the instanton
equations into a regular singular system at s = 0 with X(0) = lam free and
Y(0) = 0.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.interpolate import CubicSpline

from ..core.errors import FailedToClose, FitUnstable, InvalidEnd
from ..core.fitting import final_window, limit_at_zero, power_law_exponent, richardson_limit
from ..core.integrator import TerminationKind, Trajectory, integrate_adaptive, terminal_event
from ..core.singular import SingularSystem, solve_singular_ivp
from ..instanton.models import InstantonInit
from ..metric.b7 import instanton_coefficients
from ..metric.flow import MetricInterpolant, MetricTrajectory

logger = logging.getLogger(__name__)

END_TIME_FACTOR = 20.0
END_REMAINDER_TOL = 1e-6
CLOSE_TOL = 1e-4
BACKWARD_FLOOR = 1e-4
BOX_G = 2.0 / 3.0


class EndConditions(BaseModel):
    """End data: G_inf = lim g⁺ and the prefactor lam of f⁺ ~ lam t^(-5/2) exp(...)."""

    model_config = ConfigDict(frozen=True)

    G_inf: float
    lam: float

    @property
    def is_abelian(self) -> bool:
        return self.lam == 0.0

    def check(self, ell: float) -> "EndConditions":
        if self.G_inf < 1.0 / ell * (1.0 - 1e-12):
            raise InvalidEnd(f"G_inf = {self.G_inf:.6g} is below 1/ell = {1.0 / ell:.6g}")
        return self


class AsymptoticCoefficients:
    """
    gamma1(s) = t^4 (c_g + 4.5 ell^2 t^-3) and gamma2(s) = t^2 (c_f + 1/ell - 2.5/t)
    as functions of s = 1/t.

    Splines cover the sampled part of the metric; for s below 1/t_max the
    values are interpolated linearly towards the extrapolated limits.
    """

    def __init__(self, metric: MetricTrajectory, ell: float, t_from: float):
        mask = metric.t >= min(t_from, metric.t_max / 10.0)
        t = metric.t[mask]
        c_f, c_g = instanton_coefficients(
            metric.A1[mask], metric.A3[mask], metric.B1[mask], metric.B3[mask], metric.lam
        )
        gamma1 = t**4 * (c_g + 4.5 * ell**2 / t**3)
        gamma2 = t**2 * (c_f + 1.0 / ell - 2.5 / t)
        tail = final_window(t)
        self.limits = []
        for gamma in (gamma1, gamma2):
            try:
                limit, _ = richardson_limit(t[tail], gamma[tail], order=2)
            except FitUnstable:
                limit = float(gamma[-1])
            self.limits.append(limit)
        s = 1.0 / t[::-1]
        self.s_min = float(s[0])
        self.s_max = float(s[-1])
        self._splines = [CubicSpline(s, gamma1[::-1]), CubicSpline(s, gamma2[::-1])]
        self._edge = [float(gamma1[-1]), float(gamma2[-1])]

    def __call__(self, s: float) -> Tuple[float, float]:
        if s > self.s_max * (1.0 + 1e-12):
            raise ValueError(f"s = {s} beyond the sampled metric")
        if s >= self.s_min:
            return float(self._splines[0](s)), float(self._splines[1](s))
        w = s / self.s_min
        return tuple(lim + (edge - lim) * w for lim, edge in zip(self.limits, self._edge))


def coefficient_remainders(metric: MetricTrajectory, ell: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Larger of |c_g + 4.5 ell^2 t^-3| and |c_f + 1/ell - 2.5/t| at every sample.

    Returns:
        (t, remainder)
    """
    c_f, c_g = instanton_coefficients(metric.A1, metric.A3, metric.B1, metric.B3, metric.lam)
    t = metric.t
    remainder = np.maximum(np.abs(c_g + 4.5 * ell**2 / t**3), np.abs(c_f + 1.0 / ell - 2.5 / t))
    return t, remainder


def default_end_time(ell: float, metric: MetricTrajectory) -> float:
    """
    End time max(20 ell, t_settled), at most t_max.

    t_settled is the first sample after which both coefficient remainders stay
    below END_REMAINDER_TOL; it is t_max when they never do.
    """
    t, remainder = coefficient_remainders(metric, ell)
    above = np.flatnonzero(remainder >= END_REMAINDER_TOL)
    if above.size == 0:
        settled = float(t[0])
    elif above[-1] + 1 < t.size:
        settled = float(t[above[-1] + 1])
    else:
        settled = metric.t_max
        logger.debug(f"coefficient remainders stay above {END_REMAINDER_TOL:g} up to t_max")
    return min(max(END_TIME_FACTOR * ell, settled), metric.t_max)


class EndSeed(BaseModel):
    """(f⁺, g⁺) at the end time T with the (X, Y) trajectory in s = 1/t."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ends: EndConditions
    T: float
    f: float
    g: float
    X: float
    Y: float
    trajectory: Trajectory


def end_seed_state(ec: EndConditions, ell: float, metric: MetricTrajectory,
                   T: Optional[float] = None, rel_tol: float = 1e-10) -> EndSeed:
    """
    Solve the end system from s = 0 to s = 1/T.

    Args:
        ec: End data
        ell: Fibre length of the metric
        metric: Metric covering t = T
        T: End time, defaults to default_end_time
        rel_tol: Relative tolerance

    Returns:
        EndSeed with the reconstructed (f⁺, g⁺)(T)

    Raises:
        InvalidEnd: If G_inf < 1/ell
    """
    ec.check(ell)
    T = default_end_time(ell, metric) if T is None else T
    if T > metric.t_max * (1.0 + 1e-12):
        raise ValueError(f"end time {T} beyond the metric (t_max={metric.t_max})")
    gammas = AsymptoticCoefficients(metric, ell, T)
    G_inf = ec.G_inf
    gap = max(G_inf - 1.0 / ell, 0.0)
    K = 2.25 * ell**2 * G_inf

    def weight(s: float) -> float:
        if gap == 0.0:
            return 1.0
        if s <= 0.0:
            return 0.0
        return float(np.exp(-2.0 * gap / s))

    def phi(s, y):
        X, Y = y
        gamma1, gamma2 = gammas(s)
        return np.array(
            [
                s * X * (gamma2 - K - Y),
                -2.0 * Y
                + s * (
                    -gamma1 * G_inf
                    - 4.5 * ell**2 * s * (K + Y)
                    + gamma1 * s * s * (K + Y)
                    - s * weight(s) * X * X
                ),
            ]
        )

    h = min(1e-3, 0.25 / T)
    system = SingularSystem.from_regular_part(phi, [ec.lam, 0.0], h=h, name="end system")
    traj = solve_singular_ivp(system, 1.0 / T, rel_tol, abs_tol=rel_tol * 1e-2 * max(1.0, abs(ec.lam)))
    traj.require_no_underflow()
    if not traj.reached_end:
        raise InvalidEnd(f"end system stopped at s={traj.final_time:.6g}")
    X, Y = traj.final_state
    f = T**-2.5 * np.exp(-gap * T) * X
    g = G_inf - (K + Y) / T**2
    logger.debug(f"end seed at T={T:g}: f={f:.6e}, g={g:.10g}")
    return EndSeed(ends=ec, T=T, f=float(f), g=float(g), X=float(X), Y=float(Y), trajectory=traj)


def end_seed(ec: EndConditions, ell: float, metric: MetricTrajectory,
             T: Optional[float] = None, rel_tol: float = 1e-10) -> np.ndarray:
    """(f⁺, g⁺) at the end time T."""
    seed = end_seed_state(ec, ell, metric, T, rel_tol)
    return np.array([seed.f, seed.g])


class BackwardResult(BaseModel):
    """A closed backward shot: (F⁺, G⁺)/t^2 converged as t -> 0."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ends: EndConditions
    init: InstantonInit
    T: float
    t: np.ndarray
    F: np.ndarray
    G: np.ndarray
    variation: float
    box_entry: Optional[float] = None


def shoot_backward(ec: EndConditions, metric: MetricTrajectory, T: Optional[float] = None,
                   rel_tol: float = 1e-10, ell: Optional[float] = None) -> BackwardResult:
    """
    Integrate (F⁺, G⁺) from the end time back to the singular orbit.

    Works in sigma = -log t with v = log F⁺ when lam != 0. A shot closes when
    F⁺/t^2 and G⁺/t^2 settle as t -> 0; then (f1, g1) = 2 * limits.

    Raises:
        FailedToClose: If G⁺ leaves (0, 2/3) after entering it, F⁺ blows up,
            or F⁺/t^2 does not settle
    """
    ell = metric.ell if ell is None else ell
    if ell is None:
        raise ValueError("fibre length unknown")
    seed = end_seed_state(ec, ell, metric, T, rel_tol)
    T = seed.T
    interp = MetricInterpolant(metric)
    lam2 = metric.lam**2
    sign = -1.0 if ec.lam < 0.0 else 1.0
    log_variable = ec.lam != 0.0
    t_min = BACKWARD_FLOOR * 0.5 * metric.beta

    A1T, A3T, _, _ = interp(T)
    F_T = abs(seed.f) * A1T
    G_T = seed.g * A3T
    start = np.array([np.log(F_T) if log_variable else 0.0, G_T])

    def rhs(sigma, y):
        t = np.exp(-sigma)
        A1, A3, B1, B3 = interp(min(t, interp.t_last))
        v, G = y
        F_sq = np.exp(2.0 * v) if log_variable else 0.0
        dv = (1.0 - G) / A3 - lam2 * A1 / (B1 * B3)
        dG = (A3 / A1**2) * ((1.0 - lam2 * A1**2 / B1**2) * G - F_sq)
        return -t * np.array([dv, dG])

    events = [
        terminal_event(lambda s, y: y[1], "G_nonpositive", direction=-1.0),
    ]
    if log_variable:
        events.append(terminal_event(lambda s, y: y[0] - np.log(1e8), "F_blowup", direction=1.0))

    sigma_T, sigma_min = -np.log(T), -np.log(t_min)
    grid = np.linspace(sigma_T, sigma_min, int(np.ceil((sigma_min - sigma_T) * 100)) + 1)
    traj = integrate_adaptive(
        rhs, start, sigma_T, sigma_min, rel_tol, rel_tol * 1e-2, t_eval=grid, events=events
    )
    t = np.exp(-traj.times)
    F = np.exp(traj.states[:, 0]) if log_variable else np.zeros_like(t)
    G = traj.states[:, 1]

    if traj.termination.kind != TerminationKind.REACHED_END:
        raise FailedToClose(
            f"backward shot stopped ({traj.termination.kind.value}"
            f"{', ' + traj.termination.event if traj.termination.event else ''}) at t={t[-1]:.6g}",
            time=float(t[-1]),
        )

    inside = (G > 0.0) & (G < BOX_G)
    box_entry = None
    if np.any(inside):
        first = int(np.argmax(inside))
        box_entry = float(t[first])
        left = ~inside[first:]
        if np.any(left):
            exit_time = float(t[first:][left][0])
            raise FailedToClose("G⁺ left (0, 2/3) after entering it", time=exit_time)

    window = t <= 10.0 * t_min
    Fn = F[window] / t[window] ** 2
    Gn = G[window] / t[window] ** 2
    F_lim, _ = limit_at_zero(t[window], Fn) if log_variable else (0.0, 0.0)
    G_lim, _ = limit_at_zero(t[window], Gn)
    scale = max(abs(F_lim), abs(G_lim), 1e-300)
    variation = float(max(np.ptp(Fn), np.ptp(Gn)) / scale)
    if not np.isfinite(variation) or variation > CLOSE_TOL:
        raise FailedToClose(
            f"(F, G)/t^2 varies by {variation:.2e} near t = 0", time=float(t[-1])
        )
    init = InstantonInit(f1=sign * 2.0 * F_lim, g1=2.0 * G_lim)
    logger.info(
        f"end (G_inf={ec.G_inf:.8g}, lam={ec.lam:.6g}) closes at f1={init.f1:.10g}, g1={init.g1:.10g}"
    )
    return BackwardResult(
        ends=ec, init=init, T=T, t=t, F=sign * F, G=G, variation=variation, box_entry=box_entry
    )


def backward_contraction_rate(result: BackwardResult) -> float:
    """
    Observed power p in F⁺/t^2 - f1/2 ~ t^p on (10, 1000) times the floor.

    The linearisation at the origin contracts like t^2, so p is close to 2.
    """
    t_min = float(result.t[-1])
    window = (result.t >= 10.0 * t_min) & (result.t <= 1000.0 * t_min)
    t = result.t[window]
    if result.ends.is_abelian:
        values = result.G[window] / t**2
        limit = 0.5 * result.init.g1
    else:
        values = result.F[window] / t**2
        limit = 0.5 * result.init.f1
    return power_law_exponent(t, values - limit)


def backward_box_radius(metric: MetricTrajectory, t1: float) -> float:
    """Largest Gamma with Gamma^2 < (2/3)(1 - A1^2/B1^2) at t1."""
    A1, _, B1, _ = MetricInterpolant(metric)(t1)
    return float(np.sqrt(max(BOX_G * (1.0 - A1**2 / B1**2), 0.0)))


def end_grid(ell: float, ratios: List[float], lams: List[float]) -> List[EndConditions]:
    """End data for G_inf = ratio/ell over all (ratio, lam) pairs."""
    return [EndConditions(G_inf=r / ell, lam=lam) for r in ratios for lam in lams]

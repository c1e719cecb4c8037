"""Adaptive explicit integration with blow-up detection."""

import functools
import logging
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.integrate import solve_ivp

from .errors import InvalidSystem, StepUnderflow

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]
EventFunction = Callable[[float, np.ndarray], float]

DEFAULT_BLOWUP_THRESHOLD = 1e8
DEFAULT_METHOD = "DOP853"
STEP_UNDERFLOW_FRACTION = 1e-14


class TerminationKind(str, Enum):
    """How an integration stopped."""

    REACHED_END = "reached_end"
    BLOW_UP = "blow_up"
    STEP_UNDERFLOW = "step_underflow"
    EVENT = "event"


class Termination(BaseModel):
    """Termination record stored on every trajectory."""

    model_config = ConfigDict(frozen=True)

    kind: TerminationKind
    time: float
    event: Optional[str] = None


class Trajectory(BaseModel):
    """Sampled solution of an initial value problem.

    ``states`` has one row per entry of ``times``. ``seed_time`` is set when
    the first stored sample came from a series seed rather than the solver.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    states: np.ndarray
    termination: Termination
    nfev: int = 0
    seed_time: Optional[float] = None

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def reached_end(self) -> bool:
        return self.termination.kind == TerminationKind.REACHED_END

    def component(self, index: int) -> np.ndarray:
        """Return one state component along the whole trajectory."""
        return self.states[:, index]

    def require_no_underflow(self) -> "Trajectory":
        """Raise StepUnderflow when the solver gave up before the end."""
        if self.termination.kind == TerminationKind.STEP_UNDERFLOW:
            raise StepUnderflow(
                f"step size underflow at t={self.termination.time:.6g}",
                time=self.termination.time,
            )
        return self


def terminal_event(func: EventFunction, name: str, direction: float = 0.0) -> EventFunction:
    """
    Wrap a scalar function as a terminal event for integrate_adaptive.

    Args:
        func: Function of (t, y) whose zero stops the integration
        name: Name recorded in the trajectory termination
        direction: Crossing direction, as in scipy's event convention

    Returns:
        Event callable carrying the attributes scipy expects
    """

    @functools.wraps(func)
    def event(t: float, y: np.ndarray) -> float:
        return float(func(t, y))

    event.terminal = True  # type: ignore[attr-defined]
    event.direction = direction  # type: ignore[attr-defined]
    event.__name__ = name
    return event


def sample_grid(t_first: float, t_last: float, per_decade: int = 200,
                max_spacing: Optional[float] = None) -> np.ndarray:
    """
    Geometric grid from t_first to t_last, switching to uniform spacing.

    Args:
        t_first: First grid time (> 0)
        t_last: Last grid time
        per_decade: Number of geometric points per factor of ten
        max_spacing: Largest allowed gap; beyond it the grid is uniform

    Returns:
        Strictly increasing array containing both endpoints
    """
    if not 0.0 < t_first < t_last:
        raise ValueError(f"need 0 < t_first < t_last, got {t_first}, {t_last}")
    ratio = 10.0 ** (1.0 / per_decade)
    if max_spacing is None:
        n = int(np.ceil(np.log10(t_last / t_first) * per_decade)) + 1
        return np.geomspace(t_first, t_last, n)

    # geometric while the gap stays below max_spacing
    t_switch = min(t_last, max_spacing / (ratio - 1.0))
    if t_switch <= t_first:
        n = int(np.ceil((t_last - t_first) / max_spacing)) + 1
        return np.linspace(t_first, t_last, n)
    n_geo = max(2, int(np.ceil(np.log10(t_switch / t_first) * per_decade)) + 1)
    geometric = np.geomspace(t_first, t_switch, n_geo)
    if t_switch >= t_last:
        return geometric
    n_uni = int(np.ceil((t_last - t_switch) / max_spacing)) + 1
    uniform = np.linspace(t_switch, t_last, n_uni)
    return np.concatenate([geometric, uniform[1:]])


def integrate_adaptive(
    rhs: Rhs,
    y_start: Sequence[float],
    t_start: float,
    t_end: float,
    rel_tol: float,
    abs_tol: float,
    *,
    t_eval: Optional[np.ndarray] = None,
    events: Sequence[EventFunction] = (),
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
    max_step: float = np.inf,
    method: str = DEFAULT_METHOD,
) -> Trajectory:
    """
    Integrate y' = rhs(t, y) with an embedded explicit Runge-Kutta pair.

    The step controller is scipy's. An accepted step shorter than
    ``STEP_UNDERFLOW_FRACTION * (t_end - t_start)``, or a solver failure, ends
    the run with a StepUnderflow termination. A terminal event on the sup norm
    records BlowUp when it exceeds ``blowup_threshold``. Extra terminal
    events built with :func:`terminal_event` record an Event termination.

    Args:
        rhs: Right-hand side
        y_start: Initial state
        t_start: Initial time
        t_end: Final time (> t_start)
        rel_tol: Relative tolerance
        abs_tol: Absolute tolerance
        t_eval: Optional output grid; otherwise the accepted steps are stored
        events: Additional terminal events
        blowup_threshold: Sup-norm threshold declaring blow-up
        max_step: Largest allowed step
        method: scipy solve_ivp method name

    Returns:
        Trajectory including t_start and the final (or termination) time
    """
    if not t_end > t_start:
        raise ValueError(f"t_end must exceed t_start ({t_start} -> {t_end})")
    if rel_tol <= 0.0 or abs_tol <= 0.0:
        raise ValueError("tolerances must be positive")

    y0 = np.atleast_1d(np.asarray(y_start, dtype=float))
    f0 = np.asarray(rhs(t_start, y0), dtype=float)
    if not (np.all(np.isfinite(y0)) and np.all(np.isfinite(f0))):
        raise InvalidSystem(f"right-hand side not finite at t={t_start}")

    limit = blowup_threshold * (1.0 + 1e-6)
    blow_up = terminal_event(
        lambda t, y: limit - np.max(np.abs(y)), "blow_up", direction=-1.0
    )
    all_events: List[EventFunction] = [blow_up, *events]

    sol = solve_ivp(
        rhs,
        (t_start, t_end),
        y0,
        method=method,
        rtol=rel_tol,
        atol=abs_tol,
        max_step=max_step,
        events=all_events,
        dense_output=True,
    )

    t_last = float(sol.t[-1])
    y_last = sol.y[:, -1]
    floor = STEP_UNDERFLOW_FRACTION * (t_end - t_start)
    tiny = np.flatnonzero(np.diff(sol.t)[:-1] < floor)
    if tiny.size:
        # the controller kept going below the floor; cut the trajectory there
        cut = int(tiny[0]) + 1
        t_last = float(sol.t[cut])
        y_last = sol.y[:, cut]
        logger.debug(f"step {sol.t[cut] - sol.t[cut - 1]:.3e} below {floor:.3e} at t={t_last:.6g}")
        termination = Termination(kind=TerminationKind.STEP_UNDERFLOW, time=t_last)
    elif sol.status == 1:
        fired = next(i for i, te in enumerate(sol.t_events) if len(te) > 0)
        if fired == 0:
            termination = Termination(kind=TerminationKind.BLOW_UP, time=t_last)
        else:
            name = getattr(all_events[fired], "__name__", f"event_{fired}")
            termination = Termination(kind=TerminationKind.EVENT, time=t_last, event=name)
    elif sol.status == -1:
        logger.debug(f"solver failure at t={t_last:.6g}: {sol.message}")
        termination = Termination(kind=TerminationKind.STEP_UNDERFLOW, time=t_last)
    else:
        termination = Termination(kind=TerminationKind.REACHED_END, time=t_last)

    if t_eval is None or len(sol.t) < 2:
        times = np.asarray(sol.t, dtype=float)
        states = np.asarray(sol.y, dtype=float).T
        if tiny.size:
            times, states = times[: cut + 1], states[: cut + 1]
    else:
        grid = np.asarray(t_eval, dtype=float)
        inner = grid[(grid > t_start) & (grid < t_last)]
        times = np.concatenate([[t_start], inner, [t_last]])
        states = np.asarray(sol.sol(times), dtype=float).T
        states[0] = y0
        states[-1] = y_last

    keep = np.concatenate([[True], np.diff(times) > 0.0])
    return Trajectory(
        times=times[keep],
        states=states[keep],
        termination=termination,
        nfev=int(sol.nfev),
    )

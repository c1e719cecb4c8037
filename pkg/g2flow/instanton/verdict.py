"""Completeness verdicts, decay laws and trajectory invariants.

A solution with f⁺ != 0 is complete exactly when g⁺ stays positive, and
then G_inf = lim g⁺ >= 1/ell. Since (g⁺/A3)' = -f⁺^2/A3, the flux
U = ell g⁺/A3 is a non-increasing upper bound for G_inf.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.integrate import cumulative_trapezoid

from ..core.errors import FitUnstable, UndecidedVerdict, ViolatedAsymptotic
from ..core.fitting import exponential_decay_fit, final_window, richardson_limit
from ..core.integrator import TerminationKind
from .models import InstantonTrajectory, Verdict, VerdictKind

logger = logging.getLogger(__name__)

BOUNDARY_TOL_FACTOR = 1e-3
FLUX_TOL = 1e-9
MIN_DYNAMIC_RANGE = 1.0


def boundary_tolerance(ell: float) -> float:
    """Distance from 1/ell below which a complete verdict is on the boundary."""
    return BOUNDARY_TOL_FACTOR / ell


def flux_bound(traj: InstantonTrajectory, ell: float) -> np.ndarray:
    """U(t) = ell g⁺/A3 along the trajectory."""
    return ell * traj.g / traj.A3


def _log_f(traj: InstantonTrajectory) -> np.ndarray:
    if traj.log_f is not None:
        return traj.log_f
    with np.errstate(divide="ignore"):
        return np.log(np.abs(traj.f))


def _tail_limit(traj: InstantonTrajectory, ell: float) -> Tuple[float, float]:
    """G_inf from the flux at the last sample minus the modelled tail integral."""
    T = float(traj.t[-1])
    A3 = float(traj.A3[-1])
    U = float(ell * traj.g[-1] / A3)
    f_sq = float(np.exp(2.0 * _log_f(traj)[-1]))
    rate = max(U - 1.0 / ell, 0.0)
    drop = 0.0
    for _ in range(4):
        drop = ell * f_sq / (A3 * (2.0 * rate + 5.0 / T))
        rate = max(U - drop - 1.0 / ell, 0.0)
    return U - drop, drop


def _is_decaying(traj: InstantonTrajectory) -> bool:
    log_f = _log_f(traj)
    half = traj.t >= 0.5 * traj.t[-1]
    if half.sum() < 3:
        return False
    recent = log_f[-3:]
    return bool(log_f[-1] < log_f[half][0] and np.all(np.diff(recent) < 0.0))


def classify_trajectory(traj: InstantonTrajectory, ell: Optional[float],
                        t_max: Optional[float] = None) -> Verdict:
    """
    Decide the global behaviour of a trajectory.

    Args:
        traj: Trajectory, integrated to t_max or terminated
        ell: Fibre length of the metric
        t_max: Intended final time

    Returns:
        Verdict

    Raises:
        UndecidedVerdict: If the trajectory is too short to separate verdicts
    """
    t_max = traj.t_max if t_max is None else t_max
    if traj.init.is_abelian:
        G_inf = float(ell * traj.g[-1] / traj.A3[-1]) if ell is not None else None
        return Verdict.abelian(G_inf)

    term = traj.termination
    if term.kind == TerminationKind.BLOW_UP:
        return Verdict.incomplete(term.time, "blow_up")
    if term.kind == TerminationKind.STEP_UNDERFLOW:
        return Verdict.incomplete(term.time, "step_underflow")
    if term.kind == TerminationKind.EVENT:
        return Verdict.incomplete(term.time, term.event or "event")

    negative = traj.g < 0.0
    if np.any(negative):
        return Verdict.incomplete(float(traj.t[np.argmax(negative)]), "negative_g")
    if ell is None:
        raise UndecidedVerdict("fibre length unknown", t_max=t_max)

    U = flux_bound(traj, ell)
    below = U < 1.0 / ell
    if np.any(below):
        return Verdict.incomplete(float(traj.t[np.argmax(below)]), "flux_bound")

    tol = boundary_tolerance(ell)
    if not _is_decaying(traj):
        raise UndecidedVerdict(
            f"f⁺ still growing at t={traj.t[-1]:.6g}", t_max=t_max, uncertainty=float(U[-1] - 1.0 / ell)
        )
    G_inf, drop = _tail_limit(traj, ell)
    uncertainty = 0.5 * drop
    if uncertainty > tol or G_inf < 1.0 / ell - tol:
        raise UndecidedVerdict(
            f"G_inf = {G_inf:.6g} +- {uncertainty:.2e} at t={traj.t[-1]:.6g}",
            t_max=t_max,
            uncertainty=uncertainty,
        )
    if abs(G_inf - 1.0 / ell) < tol:
        return Verdict(
            kind=VerdictKind.COMPLETE_BOUNDARY,
            G_inf=G_inf,
            lambda_fit=lambda_prefactor(traj, ell, 1.0 / ell),
            uncertainty=uncertainty,
        )
    return Verdict(
        kind=VerdictKind.COMPLETE_EXPONENTIAL,
        G_inf=G_inf,
        lambda_fit=lambda_prefactor(traj, ell, G_inf),
        uncertainty=uncertainty,
    )


def lambda_prefactor(traj: InstantonTrajectory, ell: float, G_inf: float) -> Optional[float]:
    """Limit of f⁺ t^(5/2) exp((G_inf - 1/ell) t), or None if it does not settle."""
    mask = final_window(traj.t)
    t = traj.t[mask]
    values = np.exp(_log_f(traj)[mask] + 2.5 * np.log(t) + (G_inf - 1.0 / ell) * t)
    try:
        limit, err = richardson_limit(t, values, order=2)
    except FitUnstable:
        return None
    if not np.isfinite(limit) or err > 1e-2 * abs(limit):
        return None
    return float(np.sign(traj.f[-1]) * limit)


def decay_rate_fit(traj: InstantonTrajectory, ell: float, G_inf: float) -> Tuple[float, float]:
    """
    Fit log f⁺ = c + rate t + power log t + c'/t over the final decade.

    For a complete solution rate ~ 1/ell - G_inf and power ~ -5/2.

    Returns:
        (rate, power)

    Raises:
        FitUnstable: If f⁺ changes too little on the window
    """
    mask = final_window(traj.t)
    log_f = _log_f(traj)[mask]
    if not np.all(np.isfinite(log_f)):
        raise FitUnstable("f⁺ vanishes on the fit window")
    if np.ptp(log_f) < MIN_DYNAMIC_RANGE:
        raise FitUnstable(f"log f⁺ varies by only {np.ptp(log_f):.3g} on the fit window")
    rate, power, rms = exponential_decay_fit(traj.t[mask], log_f)
    logger.debug(f"decay fit: rate {rate:.6g} (expected {1.0 / ell - G_inf:.6g}), power {power:.4g}")
    return rate, power


class RemainderReport(BaseModel):
    """Tail behaviour of g⁺ against its abelian model (G_inf/ell) A3."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: np.ndarray
    remainder: np.ndarray
    log_weighted: np.ndarray
    k: np.ndarray
    k_sup: float
    decreasing: bool


def check_g_remainder(traj: InstantonTrajectory, G_inf: float, ell: float) -> RemainderReport:
    """
    Check g⁺ = (G_inf/ell) A3 + o(t^(-5/2) exp((1/ell - G_inf) t)) and that
    k = (g⁺ - G_inf) t^2 stays bounded.

    The remainder is A3 (int_t^T f^2/A3 + (U_T - G_inf)/ell), which keeps
    full relative precision where g⁺ itself has converged.

    Raises:
        ViolatedAsymptotic: If the weighted remainder grows over the tail or
            k is not finite
    """
    mask = final_window(traj.t)
    t = traj.t[mask]
    A3 = traj.A3[mask]
    f_sq = np.exp(2.0 * _log_f(traj)[mask])
    integrand = f_sq / A3
    # integral from t to T
    tail = cumulative_trapezoid(integrand[::-1], -t[::-1], initial=0.0)[::-1]
    U_T = float(ell * traj.g[-1] / traj.A3[-1])
    remainder = A3 * (tail + (U_T - G_inf) / ell)
    with np.errstate(divide="ignore"):
        log_weighted = np.log(np.abs(remainder)) + 2.5 * np.log(t) + (G_inf - 1.0 / ell) * t
    k = (traj.g[mask] - G_inf) * t**2

    finite = np.isfinite(log_weighted)
    decreasing = True
    if not traj.init.is_abelian and np.count_nonzero(finite) >= 2:
        values = log_weighted[finite]
        n = max(1, values.size // 10)
        decreasing = bool(np.mean(values[-n:]) < np.mean(values[:n]))

    report = RemainderReport(
        t=t,
        remainder=remainder,
        log_weighted=log_weighted,
        k=k,
        k_sup=float(np.max(np.abs(k))),
        decreasing=decreasing,
    )
    if not np.all(np.isfinite(k)):
        raise ViolatedAsymptotic("k = (g - G_inf) t^2 is not finite", samples=list(t[~np.isfinite(k)]))
    if not decreasing:
        raise ViolatedAsymptotic("weighted remainder grows over the tail", samples=list(t[-5:]))
    return report


def check_monotone_flux(traj: InstantonTrajectory, ell: float = 1.0, tol: float = FLUX_TOL) -> List[float]:
    """Times where ell g⁺/A3 increases by more than tol (relative)."""
    U = flux_bound(traj, ell)
    jumps = np.diff(U)
    bad = jumps > tol * np.maximum(1.0, np.abs(U[1:]))
    return [float(x) for x in traj.t[1:][bad]]


def check_sign_persistence(traj: InstantonTrajectory) -> List[float]:
    """Times where f⁺ has lost the sign it had at the first nonzero sample."""
    nonzero = np.flatnonzero(traj.f != 0.0)
    if nonzero.size == 0:
        return []
    first = nonzero[0]
    sign = np.sign(traj.f[first])
    bad = np.sign(traj.f[first:]) != sign
    return [float(x) for x in traj.t[first:][bad]]


def check_negative_trap(traj: InstantonTrajectory) -> List[float]:
    """Times where g⁺ is back at >= 0 after having been negative."""
    negative = np.flatnonzero(traj.g < 0.0)
    if negative.size == 0:
        return []
    start = negative[0]
    bad = traj.g[start:] >= 0.0
    return [float(x) for x in traj.t[start:][bad]]


def check_comparison(upper: InstantonTrajectory, lower: InstantonTrajectory) -> List[float]:
    """
    Ordering check for two trajectories on a shared grid.

    (f, g) belong to ``upper`` and (f^, g^) to ``lower``. Once a common sample
    has g >= g^ and |f^| >= |f| with f^ != 0 and the pairs distinct, every
    later common sample must have g > g^ and |f^| > |f|. Returns the times
    where this fails.
    """
    n = min(len(upper), len(lower))
    if n == 0 or not np.allclose(upper.t[:n], lower.t[:n], rtol=1e-12, atol=0.0):
        raise ValueError("trajectories must share their sample times")
    g, f = upper.g[:n], np.abs(upper.f[:n])
    gh, fh = lower.g[:n], np.abs(lower.f[:n])
    ordered = (g >= gh) & (fh >= f) & (fh > 0.0) & ((g != gh) | (f != fh))
    if not np.any(ordered):
        return []
    start = int(np.argmax(ordered)) + 1
    bad = ~((g[start:] > gh[start:]) & (fh[start:] > f[start:]))
    return [float(x) for x in upper.t[:n][start:][bad]]

"""Least-squares helpers for asymptotic limits and decay laws."""

import logging
from typing import Tuple

import numpy as np

from .errors import FitUnstable

logger = logging.getLogger(__name__)


def final_window(t: np.ndarray, factor: float = 10.0) -> np.ndarray:
    """Boolean mask of samples in [t_last/factor, t_last]."""
    t = np.asarray(t, dtype=float)
    return t >= t[-1] / factor


def inverse_power_fit(t: np.ndarray, values: np.ndarray, order: int) -> Tuple[np.ndarray, float]:
    """
    Fit values ~ sum_k c_k (t_ref/t)^k for k = 0..order.

    Args:
        t: Sample times (> 0)
        values: Sampled values
        order: Highest inverse power

    Returns:
        (coefficients with t_ref = max(t), rms residual)
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.size < order + 2:
        raise FitUnstable(f"{t.size} samples cannot support an order-{order} fit")
    x = t.max() / t
    design = np.vander(x, order + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coef - values) ** 2)))
    return coef, residual


def richardson_limit(t: np.ndarray, values: np.ndarray, order: int = 3) -> Tuple[float, float]:
    """
    Extrapolate values(t) to t = infinity.

    The error estimate is the larger of the fit residual and the change in
    the limit when the highest power is dropped.

    Returns:
        (limit, error estimate)
    """
    coef, residual = inverse_power_fit(t, values, order)
    lower, _ = inverse_power_fit(t, values, order - 1)
    err = max(residual, abs(coef[0] - lower[0]))
    return float(coef[0]), float(err)


def limit_at_zero(t: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """
    Extrapolate values(t) to t = 0 assuming values = L + c*t^2 + O(t^4).

    Returns:
        (limit, error estimate)
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    design = np.column_stack([np.ones_like(t), t**2, t**4])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    lower, *_ = np.linalg.lstsq(design[:, :2], values, rcond=None)
    return float(coef[0]), float(abs(coef[0] - lower[0]))


def power_law_exponent(t: np.ndarray, residual: np.ndarray) -> float:
    """Slope of log|residual| against log t."""
    t = np.asarray(t, dtype=float)
    r = np.abs(np.asarray(residual, dtype=float))
    mask = r > 0.0
    if mask.sum() < 3:
        raise FitUnstable("residual vanishes on the fit window")
    slope, _ = np.polyfit(np.log(t[mask]), np.log(r[mask]), 1)
    return float(slope)


def exponential_decay_fit(t: np.ndarray, log_f: np.ndarray) -> Tuple[float, float, float]:
    """
    Fit log f = c0 + rate*t + power*log t + c1/t.

    Returns:
        (rate, power, rms residual)
    """
    t = np.asarray(t, dtype=float)
    log_f = np.asarray(log_f, dtype=float)
    if t.size < 8:
        raise FitUnstable(f"only {t.size} samples in the decay window")
    design = np.column_stack([np.ones_like(t), t, np.log(t), 1.0 / t])
    coef, *_ = np.linalg.lstsq(design, log_f, rcond=None)
    residual = float(np.sqrt(np.mean((design @ coef - log_f) ** 2)))
    return float(coef[1]), float(coef[2]), residual

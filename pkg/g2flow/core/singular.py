"""Singular initial value problems t*y' = M_-1(y) + t*M(t, y) with y(0) = y0.

A solution exists and is unique when M_-1(y0) = 0 and h*Id - dM_-1(y0) is
invertible for every integer h >= 1. The solver checks both conditions,
builds a second-order series at t = 0, seeds at a small eps and hands off
to the adaptive integrator.
"""

import logging
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import InvalidSystem
from .integrator import (
    DEFAULT_BLOWUP_THRESHOLD,
    EventFunction,
    Trajectory,
    integrate_adaptive,
)

logger = logging.getLogger(__name__)

StateMap = Callable[[np.ndarray], np.ndarray]
TimeStateMap = Callable[[float, np.ndarray], np.ndarray]

FIXED_POINT_TOL = 1e-12
RESONANCE_TOL = 1e-8


def taylor_seed(coeffs: Sequence[Sequence[float]], eps: float) -> np.ndarray:
    """
    Evaluate a truncated power series.

    Args:
        coeffs: Coefficient vectors, coeffs[k] multiplying eps**k
        eps: Evaluation point (> 0)

    Returns:
        Sum of coeffs[k] * eps**k
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if len(coeffs) == 0:
        raise ValueError("empty coefficient list")
    total = np.zeros_like(np.atleast_1d(np.asarray(coeffs[0], dtype=float)))
    # Horner from the highest order
    for c in reversed(coeffs):
        total = total * eps + np.atleast_1d(np.asarray(c, dtype=float))
    return total


class SingularSystem:
    """First-order system with a regular singular point at t = 0."""

    def __init__(
        self,
        m_minus1: StateMap,
        m_smooth: TimeStateMap,
        y0: Sequence[float],
        regular_part: Optional[TimeStateMap] = None,
        name: str = "singular system",
    ):
        """
        Build a singular system.

        Args:
            m_minus1: Coefficient of 1/t
            m_smooth: Smooth remainder M(t, y)
            y0: Prescribed value at t = 0
            regular_part: Optional Phi with t*y' = Phi(t, y), used directly
                by the right-hand side away from t = 0
            name: Label used in log messages and errors
        """
        self.m_minus1 = m_minus1
        self.m_smooth = m_smooth
        self.y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        self.regular_part = regular_part
        self.name = name

    @classmethod
    def from_regular_part(cls, phi: TimeStateMap, y0: Sequence[float],
                          h: float = 1e-3, name: str = "singular system") -> "SingularSystem":
        """
        Build a system written as t*y' = Phi(t, y).

        M_-1 is Phi(0, .) and M(t, y) = (Phi(t, y) - Phi(0, y))/t, with the
        t = 0 value taken from a one-sided second-order difference.
        """

        def m_minus1(y: np.ndarray) -> np.ndarray:
            return np.asarray(phi(0.0, y), dtype=float)

        def m_smooth(t: float, y: np.ndarray) -> np.ndarray:
            if t == 0.0:
                p0 = np.asarray(phi(0.0, y))
                p1 = np.asarray(phi(h, y))
                p2 = np.asarray(phi(2.0 * h, y))
                return (-3.0 * p0 + 4.0 * p1 - p2) / (2.0 * h)
            return (np.asarray(phi(t, y)) - np.asarray(phi(0.0, y))) / t

        return cls(m_minus1, m_smooth, y0, regular_part=phi, name=name)

    @property
    def dimension(self) -> int:
        return int(self.y0.size)

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        """Right-hand side y' for t > 0."""
        if self.regular_part is not None:
            return np.asarray(self.regular_part(t, y), dtype=float) / t
        return np.asarray(self.m_minus1(y), dtype=float) / t + np.asarray(
            self.m_smooth(t, y), dtype=float
        )

    def _step(self) -> float:
        return 1e-5 * max(1.0, float(np.max(np.abs(self.y0))))

    def jacobian(self) -> np.ndarray:
        """Central-difference Jacobian of M_-1 at y0."""
        n = self.dimension
        h = self._step()
        jac = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            jac[:, j] = (self.m_minus1(self.y0 + e) - self.m_minus1(self.y0 - e)) / (2.0 * h)
        return jac

    def validate(self) -> np.ndarray:
        """
        Check the solvability conditions at y0.

        Returns:
            Eigenvalues of the Jacobian of M_-1 at y0

        Raises:
            InvalidSystem: If y0 is not a zero of M_-1 or an eigenvalue is a
                positive integer
        """
        residual = float(np.max(np.abs(self.m_minus1(self.y0))))
        scale = max(1.0, float(np.max(np.abs(self.y0))))
        if residual > FIXED_POINT_TOL * scale:
            raise InvalidSystem(
                f"{self.name}: M_-1(y0) = {residual:.3e} is not zero", residual=residual
            )
        eigenvalues = np.linalg.eigvals(self.jacobian())
        for ev in eigenvalues:
            k = round(ev.real)
            if k >= 1 and abs(ev - k) < RESONANCE_TOL:
                raise InvalidSystem(
                    f"{self.name}: eigenvalue {ev:.6g} is a positive integer",
                    eigenvalues=eigenvalues,
                )
        return eigenvalues

    def series_coefficients(self, t_scale: float = 1.0) -> List[np.ndarray]:
        """
        Coefficients [y0, y1, y2] of the formal solution at t = 0.

        Args:
            t_scale: Time scale of the problem, sets the difference step in t

        Returns:
            List of three coefficient vectors
        """
        n = self.dimension
        eye = np.eye(n)
        jac = self.jacobian()
        y0 = self.y0

        m0 = np.asarray(self.m_smooth(0.0, y0), dtype=float)
        y1 = np.linalg.solve(eye - jac, m0)

        ht = 1e-3 * min(1.0, t_scale)
        m1 = np.asarray(self.m_smooth(ht, y0), dtype=float)
        m2 = np.asarray(self.m_smooth(2.0 * ht, y0), dtype=float)
        m_t = (-3.0 * m0 + 4.0 * m1 - m2) / (2.0 * ht)

        forcing = m_t
        norm_y1 = float(np.max(np.abs(y1)))
        if norm_y1 > 0.0:
            d = 1e-4 * max(1.0, float(np.max(np.abs(y0)))) / norm_y1
            plus = np.asarray(self.m_minus1(y0 + d * y1))
            minus = np.asarray(self.m_minus1(y0 - d * y1))
            centre = np.asarray(self.m_minus1(y0))
            second = (plus - 2.0 * centre + minus) / d**2
            directional = (
                np.asarray(self.m_smooth(0.0, y0 + d * y1))
                - np.asarray(self.m_smooth(0.0, y0 - d * y1))
            ) / (2.0 * d)
            forcing = forcing + 0.5 * second + directional
        y2 = np.linalg.solve(2.0 * eye - jac, forcing)
        return [y0.copy(), y1, y2]


def choose_seed_time(coeffs: Sequence[np.ndarray], abs_tol: float, t_end: float,
                     t_first_sample: Optional[float] = None) -> float:
    """Seed time at which the truncated series error stays below abs_tol."""
    y1 = float(np.max(np.abs(coeffs[1])))
    y2 = float(np.max(np.abs(coeffs[2])))
    if y2 > 0.0:
        eps = (abs_tol / y2) ** (1.0 / 3.0)
    elif y1 > 0.0:
        eps = (abs_tol / y1) ** 0.5
    else:
        eps = 1e-3 * t_end
    eps = min(max(eps, 1e-8 * t_end), 1e-2 * t_end)
    if t_first_sample is not None:
        eps = min(eps, 0.5 * t_first_sample)
    return eps


def solve_singular_ivp(
    sys: SingularSystem,
    t_end: float,
    rel_tol: float,
    *,
    abs_tol: Optional[float] = None,
    eps: Optional[float] = None,
    t_eval: Optional[np.ndarray] = None,
    events: Sequence[EventFunction] = (),
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
    max_step: float = np.inf,
) -> Trajectory:
    """
    Solve a singular initial value problem on [0, t_end].

    Args:
        sys: The singular system
        t_end: Final time
        rel_tol: Relative tolerance of the adaptive phase
        abs_tol: Absolute tolerance (defaults to rel_tol * 1e-2)
        eps: Seed time override; chosen from the series otherwise
        t_eval: Optional output grid
        events: Terminal events passed to the integrator
        blowup_threshold: Sup-norm blow-up threshold
        max_step: Largest allowed step

    Returns:
        Trajectory whose first sample is (0, y0) and whose second is the seed
    """
    sys.validate()
    atol = abs_tol if abs_tol is not None else rel_tol * 1e-2
    coeffs = sys.series_coefficients(t_scale=t_end)

    grid = None if t_eval is None else np.asarray(t_eval, dtype=float)
    first = None
    if grid is not None and np.any(grid > 0.0):
        first = float(grid[grid > 0.0][0])
    if eps is None:
        eps = choose_seed_time(coeffs, atol, t_end, first)
    if not 0.0 < eps < t_end:
        raise ValueError(f"seed time {eps} outside (0, {t_end})")
    logger.debug(f"{sys.name}: seeding at eps={eps:.3e}")

    seed = taylor_seed(coeffs, eps)
    traj = integrate_adaptive(
        sys.rhs,
        seed,
        eps,
        t_end,
        rel_tol,
        atol,
        t_eval=grid,
        events=events,
        blowup_threshold=blowup_threshold,
        max_step=max_step,
    )
    return Trajectory(
        times=np.concatenate([[0.0], traj.times]),
        states=np.vstack([sys.y0, traj.states]),
        termination=traj.termination,
        nfev=traj.nfev,
        seed_time=eps,
    )

"""Taub-NUT metric and its U(1)-invariant ASD instantons in closed form.

The metric is dt^2 + f1^2 (e1^2 + e2^2) + f3^2 e3^2 with, in terms of
eta in (m^-2, inf),

    f1 = sqrt(eta)/(eta - m^-2),  f3 = eta^(-1/2),
    t  = f1 + m artanh(1/(m sqrt(eta))).
"""

import logging
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import quad
from scipy.optimize import brentq

from ..core.errors import ConstraintViolation, DomainError

logger = logging.getLogger(__name__)


class TaubNutParams(BaseModel):
    """Taub-NUT with asymptotic circle radius m."""

    model_config = ConfigDict(frozen=True)

    m: float = Field(gt=0.0)

    @property
    def c(self) -> float:
        return self.m**-2

    def scaled(self, lam: float) -> "TaubNutParams":
        """Image under f_i(t) -> lam f_i(t/lam)."""
        return TaubNutParams(m=lam * self.m)


class AsdFamily(str, Enum):
    TWO_PARAMETER = "two_parameter"
    ABELIAN = "abelian"
    ETESI_HAUSEL = "etesi_hausel"


class AsdParams(BaseModel):
    """
    Parameters of an ASD solution.

    Two-parameter solutions use (C, D) >= 0, abelian ones any real C,
    Etesi-Hausel ones B >= 0.
    """

    model_config = ConfigDict(frozen=True)

    family: AsdFamily = AsdFamily.TWO_PARAMETER
    C: float = 0.0
    D: float = 0.0
    B: float = 0.0

    @model_validator(mode="after")
    def _check(self) -> "AsdParams":
        if self.family == AsdFamily.TWO_PARAMETER and (self.C < 0.0 or self.D < 0.0):
            raise ValueError(f"two-parameter solutions need C, D >= 0, got ({self.C}, {self.D})")
        if self.family == AsdFamily.ETESI_HAUSEL and self.B < 0.0:
            raise ValueError(f"Etesi-Hausel solutions need B >= 0, got {self.B}")
        return self

    @property
    def is_self_dual_bundle(self) -> bool:
        """D = 0 solutions live on a different bundle (a3 does not vanish at t = 0)."""
        return self.family == AsdFamily.TWO_PARAMETER and self.D == 0.0

    @classmethod
    def two_parameter(cls, C: float, D: float) -> "AsdParams":
        return cls(family=AsdFamily.TWO_PARAMETER, C=C, D=D)

    @classmethod
    def abelian(cls, C: float) -> "AsdParams":
        return cls(family=AsdFamily.ABELIAN, C=C)

    @classmethod
    def etesi_hausel(cls, B: float) -> "AsdParams":
        return cls(family=AsdFamily.ETESI_HAUSEL, B=B)


def _check_eta(eta, m: float) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= m**-2):
        raise DomainError(f"eta must exceed m^-2 = {m**-2:.6g}")
    return eta


def tn_time(m: float, eta, method: str = "closed"):
    """
    Arc length t(eta) from the nut.

    Args:
        m: Circle radius
        eta: Coordinate value(s) above m^-2
        method: "closed" for the closed form, "quad" for adaptive quadrature
            of dt/deta = -sqrt(eta)/(eta - m^-2)^2 from eta to infinity

    Raises:
        DomainError: If eta <= m^-2
    """
    eta_arr = _check_eta(eta, m)
    c = m**-2
    if method == "closed":
        t = np.sqrt(eta_arr) / (eta_arr - c) + m * np.arctanh(1.0 / (m * np.sqrt(eta_arr)))
    elif method == "quad":
        integrand = lambda x: np.sqrt(x) / (x - c) ** 2  # noqa: E731
        t = np.vectorize(lambda e: quad(integrand, e, np.inf, epsabs=1e-14, epsrel=1e-12)[0])(eta_arr)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(t) if np.ndim(eta) == 0 else t


def tn_eta_at(m: float, t: float) -> float:
    """Invert tn_time by a bracketing root search."""
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    c = m**-2
    hi = 16.0 / t**2 + 2.0 * c
    while tn_time(m, hi) > t:
        hi *= 4.0
    gap = c
    while tn_time(m, c + gap) < t:
        gap *= 0.25
    return float(brentq(lambda e: tn_time(m, e) - t, c + gap, hi, xtol=1e-300, rtol=1e-15, maxiter=500))


def tn_metric(params: TaubNutParams, eta) -> Tuple:
    """
    (f1, f3, t) at eta.

    Raises:
        DomainError: If eta <= m^-2
    """
    m = params.m
    eta_arr = _check_eta(eta, m)
    f1 = np.sqrt(eta_arr) / (eta_arr - params.c)
    f3 = 1.0 / np.sqrt(eta_arr)
    t = tn_time(m, eta_arr)
    if np.ndim(eta) == 0:
        return float(f1), float(f3), float(t)
    return f1, f3, t


def tn_series(m: float, t):
    """Small-t expansions f1 = t/2 + t^3/(24 m^2), f3 = t/2 - t^3/(12 m^2)."""
    t = np.asarray(t, dtype=float)
    return t / 2.0 + t**3 / (24.0 * m**2), t / 2.0 - t**3 / (12.0 * m**2)


def deta_dt(m: float, eta):
    """d eta/dt = -(eta - m^-2)^2/sqrt(eta)."""
    eta = np.asarray(eta, dtype=float)
    return -((eta - m**-2) ** 2) / np.sqrt(eta)


def asd_eval(params: AsdParams, m: float, eta) -> Tuple:
    """
    (a1, a3) at eta.

    Raises:
        DomainError: If eta <= m^-2
    """
    a1, a3, _, _ = _asd_with_derivatives(params, m, _check_eta(eta, m))
    if np.ndim(eta) == 0:
        return float(a1), float(a3)
    return a1, a3


def asd_derivatives(params: AsdParams, m: float, eta) -> Tuple:
    """(da1/deta, da3/deta) at eta."""
    _, _, d1, d3 = _asd_with_derivatives(params, m, _check_eta(eta, m))
    return d1, d3


def _asd_with_derivatives(params: AsdParams, m: float, eta: np.ndarray):
    c = m**-2
    x = eta - c
    if params.family == AsdFamily.ABELIAN:
        a1 = np.zeros_like(eta)
        a3 = (c + params.C) / eta
        return a1, a3, np.zeros_like(eta), -a3 / eta
    if params.family == AsdFamily.ETESI_HAUSEL:
        q = 1.0 + params.B * x
        a1 = 1.0 / q
        a3 = (c + x * a1) / eta
        d1 = -params.B / q**2
        d3 = -a3 / eta + (a1 + x * d1) / eta
        return a1, a3, d1, d3
    C, D = params.C, params.D
    u = C / x
    w = u + D
    csch = 1.0 / np.sinh(w)
    coth = 1.0 / np.tanh(w)
    a1 = u * csch
    a3 = (c + C * coth) / eta
    du = -C / x**2
    d1 = csch * (1.0 - u * coth) * du
    d3 = -a3 / eta - C * csch**2 * du / eta
    return a1, a3, d1, d3


def asd_residual(params: AsdParams, m: float, eta_grid) -> float:
    """
    Largest residual of a1' + (a3 - 1) a1/f3 = 0 and a3' + f3 (a1^2 - a3)/f1^2 = 0.

    Derivatives in t come from the eta-derivatives through d eta/dt.
    """
    eta = _check_eta(eta_grid, m)
    a1, a3, d1, d3 = _asd_with_derivatives(params, m, eta)
    f1, f3, _ = tn_metric(TaubNutParams(m=m), eta)
    rate = deta_dt(m, eta)
    r1 = d1 * rate + (a3 - 1.0) * a1 / f3
    r3 = d3 * rate + f3 * (a1**2 - a3) / f1**2
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r3))))


def conserved_quantity(eta, a3, m: float, d_eta_a3=None) -> np.ndarray:
    """
    Q = (eta - m^-2)^2 d(eta a3)/deta - (eta a3 - m^-2)^2.

    ``d_eta_a3`` defaults to a second-order finite difference on the grid.
    Along any solution d(eta a3)/deta = a1^2, and Q = -C^2.
    """
    eta = np.asarray(eta, dtype=float)
    a3 = np.asarray(a3, dtype=float)
    c = m**-2
    if d_eta_a3 is None:
        d_eta_a3 = np.gradient(eta * a3, eta, edge_order=2)
    return (eta - c) ** 2 * np.asarray(d_eta_a3) - (eta * a3 - c) ** 2


def mu_from_cd(C: float, D: float, m: float) -> Tuple[float, float]:
    """Leading coefficients mu1 = (C/4) csch D, mu3 = (C/4) coth D + 1/(4 m^2)."""
    if D <= 0.0:
        raise DomainError("the seeds of a D = 0 solution are not finite")
    return 0.25 * C / np.sinh(D), 0.25 * C / np.tanh(D) + 0.25 / m**2


def cd_from_mu(mu1: float, mu3: float, m: float) -> AsdParams:
    """
    ASD solution with leading coefficients (mu1, mu3).

    Raises:
        ConstraintViolation: Unless mu3 - 1/(4 m^2) >= mu1 >= 0
    """
    shifted = mu3 - 0.25 / m**2
    if mu1 < 0.0 or shifted < mu1:
        raise ConstraintViolation(
            f"need mu3 - 1/(4m^2) >= mu1 >= 0, got mu1={mu1:.6g}, mu3 - 1/(4m^2)={shifted:.6g}"
        )
    if mu1 == 0.0:
        return AsdParams.abelian(4.0 * mu3 - m**-2)
    if shifted == mu1:
        return AsdParams.etesi_hausel(0.25 / mu1)
    quarter_c = np.sqrt(shifted**2 - mu1**2)
    return AsdParams.two_parameter(4.0 * quarter_c, float(np.arctanh(quarter_c / shifted)))


def asd_charge(params: AsdParams) -> float:
    """The value -C^2 of the conserved quantity (0 for Etesi-Hausel)."""
    if params.family == AsdFamily.ETESI_HAUSEL:
        return 0.0
    return -params.C**2


class ClosedFormRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    eta: float
    t: float
    f1: float
    f3: float
    a1: float
    a3: float
    Q: float


def sample_closed_form(m: float, asd: AsdParams, eta_grid, t_grid: Optional[np.ndarray] = None):
    """Rows (eta, t, f1, f3, a1, a3, Q) on an eta grid."""
    eta = _check_eta(eta_grid, m)
    f1, f3, t = tn_metric(TaubNutParams(m=m), eta)
    a1, a3, _, _ = _asd_with_derivatives(asd, m, eta)
    Q = conserved_quantity(eta, a3, m, d_eta_a3=a1**2)
    return [
        ClosedFormRow(eta=e, t=ti, f1=x1, f3=x3, a1=y1, a3=y3, Q=q)
        for e, ti, x1, x3, y1, y3, q in zip(eta, t, f1, f3, a1, a3, Q)
    ]


class ResidualCase(BaseModel):
    model_config = ConfigDict(frozen=True)

    m: float
    C: float
    D: float
    residual: float
    charge_drift: float


def random_residual_suite(n: int, seed: int, n_eta: int = 200) -> List[ResidualCase]:
    """
    Residual and charge drift of n two-parameter solutions.

    (C, D) are uniform in (0, 3]^2 and m in [0.5, 2]; each case is checked
    on a geometric eta grid over [1.05, 50] m^-2.
    """
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n):
        m = float(rng.uniform(0.5, 2.0))
        C, D = (float(v) for v in 3.0 - 3.0 * rng.random(2))
        asd = AsdParams.two_parameter(C, D)
        eta = np.geomspace(1.05, 50.0, n_eta) / m**2
        a1, a3, _, _ = _asd_with_derivatives(asd, m, eta)
        Q = conserved_quantity(eta, a3, m, d_eta_a3=a1**2)
        cases.append(
            ResidualCase(
                m=m, C=C, D=D,
                residual=asd_residual(asd, m, eta),
                charge_drift=float(np.max(np.abs(Q + C**2))),
            )
        )
    return cases

"""The B7 family of cohomogeneity-one ALC G2-metrics.

Two parameterisations are supported. The Hitchin variables (a, b) with
constants p = -q = r0^3, and the orbit metric coefficients (A1, A3, B1, B3)
with g_t = sum A_i^2 (e_i^+)^2 + B_i^2 (e_i^-)^2 and A2 = A1, B2 = B1.
"""

import logging
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import ConstraintViolation, DegenerateSeed, FormMismatch

logger = logging.getLogger(__name__)

CONSTRAINT_TOL = 1e-12
H_FORM_TOL = 1e-9


class FamilyKind(str, Enum):
    """Global behaviour of a family member."""

    ALC = "alc"
    AC = "ac"
    INCOMPLETE = "incomplete"


class B7Params(BaseModel):
    """Series data (r0, abar, bbar) of a family member at the singular orbit."""

    model_config = ConfigDict(frozen=True)

    r0: float = Field(gt=0.0)
    abar: float
    bbar: float

    @model_validator(mode="after")
    def _check_constraint(self) -> "B7Params":
        value = 64.0 * self.r0 * (2.0 * self.abar + self.bbar)
        if abs(value - 1.0) > CONSTRAINT_TOL:
            raise ValueError(f"64*r0*(2*abar + bbar) = {value!r}, expected 1")
        return self

    @property
    def p(self) -> float:
        return self.r0**3

    @property
    def q(self) -> float:
        return -self.r0**3

    @property
    def kind(self) -> FamilyKind:
        x = 64.0 * self.abar * self.r0
        if abs(x - 1.0 / 3.0) <= CONSTRAINT_TOL:
            return FamilyKind.AC
        return FamilyKind.ALC if x > 1.0 / 3.0 else FamilyKind.INCOMPLETE

    @property
    def taub_nut_radius(self) -> Optional[float]:
        """Circle radius m of the Taub-NUT space in the collapsed limit."""
        d = 2.0 * self.abar - self.bbar
        if d <= 0.0:
            return None
        return float((24.0 * self.r0**3 * d) ** -0.5)

    @classmethod
    def from_r0_abar(cls, r0: float, abar: float) -> "B7Params":
        """Member with bbar eliminated through the constraint."""
        return cls(r0=r0, abar=abar, bbar=1.0 / (64.0 * r0) - 2.0 * abar)

    @classmethod
    def ac_point(cls, r0: float = 1.0) -> "B7Params":
        """The asymptotically conical member abar = bbar."""
        return cls(r0=r0, abar=1.0 / (192.0 * r0), bbar=1.0 / (192.0 * r0))

    @classmethod
    def from_taub_nut(cls, m: float, r0: float) -> "B7Params":
        """
        Member whose collapsed limit is Taub-NUT with circle radius m.

        Args:
            m: Taub-NUT circle radius
            r0: Scale of the singular orbit

        Raises:
            ConstraintViolation: If r0^2 m^2 >= 8 (no ALC member)
        """
        if m <= 0.0 or r0 <= 0.0:
            raise ConstraintViolation(f"need m > 0 and r0 > 0, got m={m}, r0={r0}")
        if r0**2 * m**2 >= 8.0:
            raise ConstraintViolation(f"r0^2 m^2 = {r0**2 * m**2:.6g} >= 8 is not ALC")
        s = 1.0 / (64.0 * r0)
        d = 1.0 / (24.0 * r0**3 * m**2)
        return cls(r0=r0, abar=(s + d) / 4.0, bbar=(s - d) / 2.0)

    def normal_form_a3(self, rescaled: bool = False) -> float:
        """t^3 coefficient of A3 at the singular orbit."""
        d = 2.0 * self.abar - self.bbar
        return -2.0 * self.r0**3 * d if rescaled else -2.0 * d / self.r0


class MetricSample(BaseModel):
    """Metric data at one time. Hitchin variables are absent on rescaled flows."""

    model_config = ConfigDict(frozen=True)

    t: float
    A1: float
    A3: float
    B1: float
    B3: float
    a: Optional[float] = None
    b: Optional[float] = None
    adot: Optional[float] = None
    bdot: Optional[float] = None
    p: Optional[float] = None

    @property
    def has_hitchin(self) -> bool:
        return None not in (self.a, self.b, self.adot, self.bdot, self.p)


def coefficients_from_offsets(da, db, adot, bdot, p):
    """
    Orbit coefficients from a - p and b - p.

    Working with the offsets keeps b - p and 2a - b - p accurate near the
    singular orbit where both are O(t^2).
    """
    two_a_minus = 2.0 * da - db
    two_a_plus = 2.0 * da + db + 4.0 * p
    x1 = adot * bdot
    A1 = np.sqrt(db * two_a_minus / x1)
    B1 = np.sqrt(db * two_a_plus / x1)
    A3 = db / adot
    B3 = 2.0 * x1 / db
    return A1, A3, B1, B3


def metric_from_ab(a, b, adot, bdot, p):
    """
    Map Hitchin variables to orbit coefficients.

    Args:
        a, b: Hitchin functions
        adot, bdot: Their derivatives
        p: The constant r0^3

    Returns:
        (A1, A3, B1, B3)
    """
    return coefficients_from_offsets(
        np.asarray(a) - p, np.asarray(b) - p, np.asarray(adot), np.asarray(bdot), p
    )


def ab_from_metric(A1, A3, B1, B3, p):
    """
    Inverse of :func:`metric_from_ab`.

    Returns:
        (a, b, adot, bdot)
    """
    a = B3 * (A1**2 + B1**2) / 8.0
    b = B3 * (B1**2 - A1**2) / 4.0 - p
    adot = (b - p) / A3
    bdot = A3 * B3 / 2.0
    return a, b, adot, bdot


def metric_squares(sample: MetricSample) -> Tuple[float, ...]:
    """The six squared coefficients of g_t."""
    return (
        sample.A1**2,
        sample.A1**2,
        sample.A3**2,
        sample.B1**2,
        sample.B1**2,
        sample.B3**2,
    )


def hitchin_F(a, b, p):
    """F(a, b) = 4a^2(b - p)(b + q) - (b^2 + pq)^2 with q = -p, factored."""
    return (b - p) ** 2 * (2.0 * a - b - p) * (2.0 * a + b + p)


def hitchin_rhs(t: float, y: np.ndarray, p: float) -> np.ndarray:
    """Hitchin flow for (x1, x2, a, b) = (adot*bdot, adot^2, a, b)."""
    x1, x2, a, b = y
    s = np.sqrt((2.0 * a - b - p) * (2.0 * a + b + p))
    root = np.sqrt(x2)
    return np.array(
        [
            2.0 * a * (b - p) / s,
            2.0 * (2.0 * a * a - b * (b + p)) / s,
            root,
            x1 / root,
        ]
    )


def hitchin_second_derivatives(y: np.ndarray, p: float) -> Tuple[float, float]:
    """(a'', b'') from the Hitchin right-hand side."""
    x1, x2 = y[0], y[1]
    dx1, dx2, _, _ = hitchin_rhs(0.0, y, p)
    root = np.sqrt(x2)
    a_dd = dx2 / (2.0 * root)
    b_dd = dx1 / root - x1 * dx2 / (2.0 * x2 * root)
    return float(a_dd), float(b_dd)


def ab_rhs(t: float, y: np.ndarray, lam: float = 1.0) -> np.ndarray:
    """
    Orbit-coefficient flow, dressed with the collapse parameter lam.

    lam = 1 is the Hitchin flow itself; general lam is the flow of
    A^lam(t) = lam^-2 A(lam^2 t), B^lam(t) = lam^-1 B(lam^2 t).
    """
    A1, A3, B1, B3 = y
    l2 = lam * lam
    return np.array(
        [
            0.5 * ((B1**2 + B3**2 - l2 * A1**2) / (B1 * B3) - A3 / A1),
            0.5 * (A3**2 / A1**2 - l2 * A3**2 / B1**2),
            0.5 * ((l2 * A1**2 + B3**2 - B1**2) / (A1 * B3) + l2 * A3 / B1),
            (l2 * A1**2 + B1**2 - B3**2) / (A1 * B1),
        ]
    )


def normal_form_rhs(t: float, y: np.ndarray, lam: float, beta: float) -> np.ndarray:
    """
    Right-hand side Phi of t*y' = Phi(t, y) for y = (a1, a3, b1, b3).

    The coefficients are A_i = t(1/2 + t^2 a_i) and B_i = beta + t^2 b_i.
    """
    a1, a3, b1, b3 = y
    t2 = t * t
    l2 = lam * lam
    al1 = 0.5 + t2 * a1
    al3 = 0.5 + t2 * a3
    B1 = beta + t2 * b1
    B3 = beta + t2 * b3
    delta = (a3 - a1) / al1
    return np.array(
        [
            0.5 * (t2 * (b1 - b3) ** 2 / (B1 * B3) - l2 * al1**2 / (B1 * B3) - delta)
            - 3.0 * a1,
            0.5 * (2.0 * delta + t2 * delta**2 - l2 * al3**2 / B1**2) - 3.0 * a3,
            0.5 * ((l2 * al1**2 + (b3 - b1) * (B1 + B3)) / (al1 * B3) + l2 * al3 / B1)
            - 2.0 * b1,
            (l2 * al1**2 + (b1 - b3) * (B1 + B3)) / (al1 * B1) - 2.0 * b3,
        ]
    )


def normal_form_fixed_point(a3: float, lam: float, beta: float) -> np.ndarray:
    """The value (a1, a3, b1, b3) at t = 0 with the given free a3."""
    b = lam * lam / (4.0 * beta)
    a1 = (-lam * lam / (8.0 * beta * beta) - a3) / 2.0
    return np.array([a1, a3, b, b])


def normal_form_to_metric(t, y, beta):
    """(A1, A3, B1, B3) from normal-form variables."""
    a1, a3, b1, b3 = y
    t2 = t * t
    return t * (0.5 + t2 * a1), t * (0.5 + t2 * a3), beta + t2 * b1, beta + t2 * b3


def normal_form_to_offsets(t, y, beta):
    """
    (a - p, b - p) from unscaled normal-form variables without cancellation.

    Valid for lam = 1, where beta = 2 r0 and p = beta^3/8.
    """
    a1, a3, b1, b3 = y
    t2 = t * t
    al1 = 0.5 + t2 * a1
    B3 = beta + t2 * b3
    common = beta**2 * (b3 + 2.0 * b1) + beta * t2 * (b1**2 + 2.0 * b1 * b3) + t2 * t2 * b1**2 * b3
    da = t2 / 8.0 * (B3 * al1**2 + common)
    db = t2 / 4.0 * (common - B3 * al1**2)
    return da, db


def seed_metric(params: B7Params, eps: float) -> MetricSample:
    """
    Evaluate the t^4 series of (a, b) at the singular orbit.

    Args:
        params: Family member
        eps: Seed time, small compared with r0

    Returns:
        MetricSample at t = eps

    Raises:
        DegenerateSeed: If a square-root argument is not positive
    """
    r0, p = params.r0, params.p
    t2 = eps * eps
    da = 0.25 * r0 * t2 + params.abar * t2 * t2
    db = 0.25 * r0 * t2 + params.bbar * t2 * t2
    adot = 0.5 * r0 * eps + 4.0 * params.abar * eps**3
    bdot = 0.5 * r0 * eps + 4.0 * params.bbar * eps**3
    if db <= 0.0 or 2.0 * da - db <= 0.0 or adot * bdot <= 0.0:
        raise DegenerateSeed(f"series seed degenerate at eps={eps}", eps=eps)
    A1, A3, B1, B3 = coefficients_from_offsets(da, db, adot, bdot, p)
    return MetricSample(
        t=eps, A1=A1, A3=A3, B1=B1, B3=B3,
        a=p + da, b=p + db, adot=adot, bdot=bdot, p=p,
    )


def eval_H_ab(a, b, adot, bdot, p):
    """H in Hitchin variables."""
    s = 4.0 * a * a - (b + p) ** 2
    num = (
        (2.0 * adot**2 - adot * bdot) * s
        + adot * bdot * (b - p) * (2.0 * a - b - p)
        - 4.0 * adot**2 * a * (b - p)
    )
    return num / (2.0 * (b - p) ** 2 * s)


def eval_H_coefficients(A1, A3, B1, B3):
    """H in orbit coefficients."""
    return 0.5 * (2.0 / A3**2 + 1.0 / B1**2 - (A1**2 + B1**2 + B3**2) / (A1 * A3 * B1 * B3))


def eval_H(sample: MetricSample) -> float:
    """
    Evaluate H, cross-checking both closed forms when possible.

    Raises:
        FormMismatch: If the two forms disagree beyond 1e-9 relative
    """
    h_ab_form = float(eval_H_coefficients(sample.A1, sample.A3, sample.B1, sample.B3))
    if not sample.has_hitchin:
        return h_ab_form
    h_hitchin = float(eval_H_ab(sample.a, sample.b, sample.adot, sample.bdot, sample.p))
    scale = max(1.0, abs(h_ab_form), 2.0 / sample.A3**2)
    if abs(h_hitchin - h_ab_form) > H_FORM_TOL * scale:
        raise FormMismatch(
            f"H forms disagree at t={sample.t:.6g}: {h_hitchin!r} vs {h_ab_form!r}",
            values=(h_hitchin, h_ab_form),
        )
    return h_ab_form


def eval_H_hat(sample: MetricSample) -> Tuple[float, float]:
    """
    The factorisation H = prefactor * H_hat.

    Returns:
        (H_hat, prefactor)
    """
    if not sample.has_hitchin:
        raise ValueError("H_hat needs Hitchin variables")
    a, b, p = sample.a, sample.b, sample.p
    bprime = sample.bdot / sample.adot
    s = 4.0 * a * a - (b + p) ** 2
    h_hat = (2.0 - bprime) * (s - 2.0 * a * (b - p)) - bprime * (b - p) * (b + p)
    prefactor = sample.adot**2 / (2.0 * (b - p) ** 2 * s)
    return float(h_hat), float(prefactor)


def instanton_coefficients(A1, A3, B1, B3, lam: float = 1.0):
    """
    Coefficients of the reduced instanton equations.

    f' = -c_f f - f g and g' = -c_g g - f^2.

    Returns:
        (c_f, c_g)
    """
    l2 = lam * lam
    c_g = 0.5 * (l2 * A3 / B1**2 - A3 / A1**2)
    c_f = 0.5 * (
        (l2 * A1**2 + B3**2 + B1**2) / (A1 * B1 * B3) - (A3**2 + 2.0 * A1**2) / (A1**2 * A3)
    )
    return c_f, c_g

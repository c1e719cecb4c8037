"""Collapse of ALC family members to Taub-NUT x S^2 and the matching instanton limit."""

import logging
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..core.errors import DomainError
from ..instanton.flow import integrate_FG
from ..instanton.models import InstantonInit
from ..metric.b7 import B7Params
from ..metric.flow import MetricTrajectory, flow_metric_rescaled
from .closed_form import AsdParams, asd_eval, cd_from_mu, tn_eta_at

logger = logging.getLogger(__name__)

# Linearisation of the rescaled normal form at t = 0 with lam = 0, in (a1, a3) and (b1, b3)
A_BLOCK = np.array([[-2.0, -1.0], [-2.0, -1.0]])
B_BLOCK = np.array([[-4.0, 2.0], [4.0, -6.0]])

DEFAULT_COMPARE_T_MAX = 4.0


def params_for_taub_nut(m: float, r0: float) -> B7Params:
    """Family member of scale r0 whose collapsed limit has circle radius m."""
    return B7Params.from_taub_nut(m, r0)


def rescaled_b7_flow(params: B7Params, lam: float, t_max: float = 20.0,
                     rel_tol: float = 1e-10) -> MetricTrajectory:
    """
    Flow of the rescaled metric B_i = 2 + t^2 b_i, A_i = t/2 + t^3 a_i.

    lam = r0 reproduces the family member up to scale; lam = 0 is Taub-NUT
    with m^2 = 1/(24 r0^3 (2 abar - bbar)) times a round sphere of radius 2.

    Raises:
        DomainError: Unless 0 <= lam <= r0
    """
    if not 0.0 <= lam <= params.r0:
        raise DomainError(f"need 0 <= lam <= r0 = {params.r0}, got {lam}")
    return flow_metric_rescaled(params.normal_form_a3(rescaled=True), lam, t_max, rel_tol, params=params)


def taub_nut_flow(m: float, t_max: float = 20.0, rel_tol: float = 1e-10) -> MetricTrajectory:
    """The lam = 0 rescaled flow for circle radius m."""
    return flow_metric_rescaled(-1.0 / (12.0 * m**2), 0.0, t_max, rel_tol)


class AsdSolution(BaseModel):
    """Numerically integrated ASD connection on Taub-NUT."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    m: float
    mu1: float
    mu3: float
    t: np.ndarray
    eta: np.ndarray
    a1: np.ndarray
    a3: np.ndarray
    d_eta_a3: np.ndarray


def integrate_asd(m: float, mu1: float, mu3: float, t_max: float = 20.0,
                  rel_tol: float = 1e-10) -> AsdSolution:
    """
    Integrate the ASD equations on Taub-NUT from a1 ~ mu1 t^2, a3 ~ mu3 t^2.

    The metric and connection are solved together in normal form, seeded at
    (1/(24 m^2), -1/(12 m^2), mu1, mu3). Along the solution d(eta a3)/deta = a1^2.
    """
    metric = taub_nut_flow(m, t_max, rel_tol)
    traj = integrate_FG(InstantonInit(f1=2.0 * mu1, g1=2.0 * mu3), metric, t_max, rel_tol)
    a1 = traj.F
    return AsdSolution(
        m=m,
        mu1=mu1,
        mu3=mu3,
        t=traj.t,
        eta=1.0 / traj.A3**2,
        a1=a1,
        a3=traj.G,
        d_eta_a3=a1**2,
    )


def closed_form_along(asd: AsdParams, m: float, t: np.ndarray, stride: int = 1):
    """(t, a1, a3) of the closed-form solution at every stride-th time."""
    ts = np.asarray(t, dtype=float)[::stride]
    eta = np.array([tn_eta_at(m, ti) for ti in ts])
    a1, a3 = asd_eval(asd, m, eta)
    return ts, a1, a3


class AdiabaticRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    r0: float
    lam: float
    sup_err_a1: float
    sup_err_a3: float
    t_max: float


class AdiabaticTable(BaseModel):
    """Errors of rescaled family instantons against the Taub-NUT limit."""

    model_config = ConfigDict(frozen=True)

    mu1: float
    mu3: float
    m: float
    asd: AsdParams
    rows: List[AdiabaticRow]

    def ratios(self) -> List[float]:
        """Successive ratios err(r0_k)/err(r0_{k+1}) of the combined error."""
        errs = [max(r.sup_err_a1, r.sup_err_a3) for r in self.rows]
        return [a / b for a, b in zip(errs, errs[1:]) if b > 0.0]


def adiabatic_instanton_compare(mu1: float, mu3: float, m: float, r0_values: Sequence[float],
                                t_max: float = DEFAULT_COMPARE_T_MAX,
                                rel_tol: float = 1e-10, stride: int = 4) -> AdiabaticTable:
    """
    Compare rescaled instantons of collapsing family members with ASD connections.

    For each r0 the member with circle radius m is flowed at lam = r0 and the
    instanton is seeded with F~(0) = mu1, G~(0) = mu3. The limit connection is
    the closed-form solution with the same leading coefficients.

    Raises:
        ConstraintViolation: Unless mu3 - 1/(4 m^2) >= mu1 >= 0
    """
    asd = cd_from_mu(mu1, mu3, m)
    logger.info(f"Limit connection {asd.family.value} C={asd.C:.6g} D={asd.D:.6g} B={asd.B:.6g}")
    init = InstantonInit(f1=2.0 * mu1, g1=2.0 * mu3)
    rows = []
    for r0 in r0_values:
        params = params_for_taub_nut(m, r0)
        metric = rescaled_b7_flow(params, r0, t_max, rel_tol)
        traj = integrate_FG(init, metric, t_max, rel_tol)
        ts, a1, a3 = closed_form_along(asd, m, traj.t, stride)
        err1 = float(np.max(np.abs(traj.F[::stride] - a1)))
        err3 = float(np.max(np.abs(traj.G[::stride] - a3)))
        logger.info(f"r0={r0:.4g}: sup|F - a1|={err1:.3e}, sup|G - a3|={err3:.3e}")
        rows.append(AdiabaticRow(r0=r0, lam=r0, sup_err_a1=err1, sup_err_a3=err3, t_max=t_max))
    return AdiabaticTable(mu1=mu1, mu3=mu3, m=m, asd=asd, rows=rows)


def linearisation_eigenvalues() -> List[float]:
    """Eigenvalues of the boundary linearisation, {0, -3} from the a-block and {-2, -8} from the b-block."""
    values = np.concatenate([np.linalg.eigvals(A_BLOCK), np.linalg.eigvals(B_BLOCK)])
    return sorted(float(v) for v in np.real_if_close(values).real)

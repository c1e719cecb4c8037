"""Data models for reduced G2-instanton solutions."""

from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..core.integrator import Termination

TRAJECTORY_COLUMNS = ["t", "fplus", "gplus", "Fplus", "Gplus"]


class InstantonInit(BaseModel):
    """Leading coefficients f⁺ = f1 t + O(t^3), g⁺ = g1 t + O(t^3)."""

    model_config = ConfigDict(frozen=True)

    f1: float
    g1: float

    @property
    def is_abelian(self) -> bool:
        return self.f1 == 0.0

    def flipped(self) -> "InstantonInit":
        """Gauge-equivalent data with f1 -> -f1."""
        return InstantonInit(f1=-self.f1, g1=self.g1)


class VerdictKind(str, Enum):
    """Global behaviour of a solution."""

    ABELIAN = "abelian"
    COMPLETE_EXPONENTIAL = "complete_exponential"
    COMPLETE_BOUNDARY = "complete_boundary"
    INCOMPLETE = "incomplete"
    UNDECIDED = "undecided"


VERDICT_CODES = {
    VerdictKind.ABELIAN: 0,
    VerdictKind.COMPLETE_EXPONENTIAL: 1,
    VerdictKind.COMPLETE_BOUNDARY: 2,
    VerdictKind.INCOMPLETE: 3,
    VerdictKind.UNDECIDED: 4,
}


class Verdict(BaseModel):
    """Classification of one trajectory.

    ``G_inf`` is set for abelian and complete verdicts, ``t_stop`` and
    ``reason`` for incomplete ones, ``uncertainty`` for undecided ones.
    """

    model_config = ConfigDict(frozen=True)

    kind: VerdictKind
    G_inf: Optional[float] = None
    lambda_fit: Optional[float] = None
    t_stop: Optional[float] = None
    reason: Optional[str] = None
    uncertainty: Optional[float] = None

    @property
    def is_complete(self) -> bool:
        return self.kind in (
            VerdictKind.ABELIAN,
            VerdictKind.COMPLETE_EXPONENTIAL,
            VerdictKind.COMPLETE_BOUNDARY,
        )

    @property
    def code(self) -> int:
        return VERDICT_CODES[self.kind]

    @classmethod
    def abelian(cls, G_inf: float) -> "Verdict":
        return cls(kind=VerdictKind.ABELIAN, G_inf=G_inf)

    @classmethod
    def incomplete(cls, t_stop: float, reason: str) -> "Verdict":
        return cls(kind=VerdictKind.INCOMPLETE, t_stop=t_stop, reason=reason)


class InstantonTrajectory(BaseModel):
    """
    Sampled (f⁺, g⁺) along a metric, with the metric coefficients A1, A3 at
    the same times.

    ``log_f`` is log|f⁺|, carried at full relative precision when the far
    field was integrated in the log variable.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    init: InstantonInit
    form: str
    t: np.ndarray
    f: np.ndarray
    g: np.ndarray
    A1: np.ndarray
    A3: np.ndarray
    log_f: Optional[np.ndarray] = None
    termination: Termination
    t_max: float
    rel_tol: float
    ell: Optional[float] = None
    verdict: Optional[Verdict] = None

    @property
    def F(self) -> np.ndarray:
        return self.A1 * self.f

    @property
    def G(self) -> np.ndarray:
        return self.A3 * self.g

    @property
    def G_inf(self) -> Optional[float]:
        return self.verdict.G_inf if self.verdict is not None else None

    def __len__(self) -> int:
        return int(self.t.size)

    @property
    def samples(self) -> List[Tuple[float, float, float, float, float]]:
        """Rows (t, f⁺, g⁺, F⁺, G⁺) in TRAJECTORY_COLUMNS order."""
        F, G = self.F, self.G
        return [
            (float(self.t[i]), float(self.f[i]), float(self.g[i]), float(F[i]), float(G[i]))
            for i in range(len(self))
        ]

    def with_verdict(self, verdict: Verdict) -> "InstantonTrajectory":
        return self.model_copy(update={"verdict": verdict})

    def sidecar(self) -> dict:
        """Provenance fields stored next to the trajectory table."""
        verdict = self.verdict
        return {
            "f1": self.init.f1,
            "g1": self.init.g1,
            "verdict": verdict.kind.value if verdict is not None else None,
            "Ginf": self.G_inf,
            "lambda_fit": verdict.lambda_fit if verdict is not None else None,
            "ell": self.ell,
        }


class FullInstantonTrajectory(BaseModel):
    """Sampled (f⁺, f⁻, g⁺, g⁻) of the four-function system."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray
    termination: Termination
    t_start: float

    def flipped(self) -> "FullInstantonTrajectory":
        """Image under (f⁺, f⁻, g⁺, g⁻) -> (-f⁺, f⁻, g⁺, -g⁻)."""
        return self.model_copy(update={"f_plus": -self.f_plus, "g_minus": -self.g_minus})

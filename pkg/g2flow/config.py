"""Environment settings and run configuration."""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core.errors import ConfigError

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

REFERENCE_ABAR = 1.0 / 128.0


class Settings:
    """Process-wide settings read from the environment."""

    # Seed of the pseudo-random streams used by residual suites
    G2FLOW_SEED: int = int(os.getenv("G2FLOW_SEED") or "20240101")

    # Default worker count
    G2FLOW_JOBS: int = int(os.getenv("G2FLOW_JOBS") or "1")

    G2FLOW_LOG_LEVEL: str = os.getenv("G2FLOW_LOG_LEVEL", "INFO").upper()
    G2FLOW_OUTPUT_DIR: str = os.getenv("G2FLOW_OUTPUT_DIR", "g2flow-out")

    @classmethod
    def validate(cls) -> None:
        """Validate the environment settings."""
        if cls.G2FLOW_SEED < 0:
            raise ConfigError("G2FLOW_SEED must be non-negative")
        if cls.G2FLOW_JOBS < 1:
            raise ConfigError("G2FLOW_JOBS must be at least 1")
        if cls.G2FLOW_LOG_LEVEL not in LOG_LEVELS:
            raise ConfigError(f"G2FLOW_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}")
        if not cls.G2FLOW_OUTPUT_DIR:
            raise ConfigError("G2FLOW_OUTPUT_DIR must not be empty")


settings = Settings()


def _ordered(pair: Optional[Tuple[float, float]], name: str) -> None:
    if pair is not None and not pair[0] < pair[1]:
        raise ValueError(f"{name} must satisfy low < high, got {pair}")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FamilyConfig(_Section):
    """Family member, by abar or by target fibre length. Neither means the reference member."""

    r0: float = Field(default=1.0, gt=0.0)
    abar: Optional[float] = None
    ell_target: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _one_specification(self) -> "FamilyConfig":
        if self.abar is not None and self.ell_target is not None:
            raise ValueError("give either family.abar or family.ell_target, not both")
        return self

    def resolved_abar(self) -> Optional[float]:
        if self.ell_target is not None:
            return None
        return REFERENCE_ABAR / self.r0 if self.abar is None else self.abar


class SolverConfig(_Section):
    rel_tol: float = Field(default=1e-10, gt=0.0)
    abs_tol: Optional[float] = Field(default=None, gt=0.0)
    t_max: float = Field(default=400.0, gt=0.0)
    blowup_threshold: float = Field(default=1e8, gt=0.0)
    per_decade: int = Field(default=200, ge=10)


class ScanConfig(_Section):
    f1_range: Optional[Tuple[float, float]] = None
    g1_range: Optional[Tuple[float, float]] = None
    n_f: int = Field(default=64, ge=2)
    n_g: int = Field(default=64, ge=2)
    escalate: bool = True
    undecided_limit: float = Field(default=0.1, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _ranges(self) -> "ScanConfig":
        _ordered(self.f1_range, "scan.f1_range")
        _ordered(self.g1_range, "scan.g1_range")
        return self


class BoundaryConfig(_Section):
    g1_list: List[float] = Field(default_factory=list)
    n_points: int = Field(default=8, ge=1)
    bisect_tol: float = Field(default=1e-6, gt=0.0)


class TaubNutConfig(_Section):
    m: float = Field(default=1.0, gt=0.0)
    C: float = Field(default=1.0, ge=0.0)
    D: float = Field(default=1.0, ge=0.0)
    eta_range: Tuple[float, float] = (1.01, 100.0)
    n_eta: int = Field(default=200, ge=2)
    residual_limit: float = Field(default=1e-8, gt=0.0)
    random_cases: int = Field(default=100, ge=0)
    adiabatic: bool = False
    mu1: Optional[float] = None
    mu3: Optional[float] = None
    r0_list: List[float] = Field(default_factory=lambda: [0.4, 0.2, 0.1])
    adiabatic_t_max: float = Field(default=4.0, gt=0.0)

    @model_validator(mode="after")
    def _ranges(self) -> "TaubNutConfig":
        _ordered(self.eta_range, "taubnut.eta_range")
        if self.eta_range[0] <= 1.0:
            raise ValueError("taubnut.eta_range is in units of m^-2 and must start above 1")
        if (self.mu1 is None) != (self.mu3 is None):
            raise ValueError("give both taubnut.mu1 and taubnut.mu3 or neither")
        if any(r <= 0.0 for r in self.r0_list):
            raise ValueError("taubnut.r0_list must be positive")
        return self


class InstantonConfig(_Section):
    """One initial condition, in units of ell^-2."""

    f1_ratio: float = 0.5
    g1_ratio: float = 1.5
    mode: Literal["cointegrated", "interpolated"] = "cointegrated"
    escalate: bool = True


class EndshootConfig(_Section):
    ginf_ratios: List[float] = Field(default_factory=lambda: [1.2, 1.5, 2.0])
    lambdas: List[float] = Field(default_factory=lambda: [1.0, 1.0, 1.0])
    end_time: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _pairs(self) -> "EndshootConfig":
        if len(self.ginf_ratios) != len(self.lambdas):
            raise ValueError("endshoot.ginf_ratios and endshoot.lambdas must have equal length")
        if any(r < 1.0 for r in self.ginf_ratios):
            raise ValueError("endshoot.ginf_ratios must be >= 1")
        return self


class OutputConfig(_Section):
    directory: str = Field(default_factory=lambda: settings.G2FLOW_OUTPUT_DIR)
    format: Literal["csv", "json"] = "csv"


class RunConfig(_Section):
    """Everything a run depends on."""

    family: FamilyConfig = Field(default_factory=FamilyConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    scan: ScanConfig = Field(default_factory=ScanConfig)
    boundary: BoundaryConfig = Field(default_factory=BoundaryConfig)
    instanton: InstantonConfig = Field(default_factory=InstantonConfig)
    taubnut: TaubNutConfig = Field(default_factory=TaubNutConfig)
    endshoot: EndshootConfig = Field(default_factory=EndshootConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Sequence[str] = ()) -> "RunConfig":
        """
        Build a config from a key-value file and ``key=value`` overrides.

        Args:
            path: Optional file with ``section.key = value`` lines and ``#`` comments
            overrides: Extra assignments applied after the file

        Raises:
            ConfigError: On unreadable files, malformed lines or invalid values
        """
        entries: Dict[str, Any] = {}
        if path is not None:
            try:
                text = Path(path).read_text()
            except OSError as e:
                raise ConfigError(f"cannot read config {path}: {e}") from e
            for lineno, line in enumerate(text.splitlines(), start=1):
                stripped = line.split("#", 1)[0].strip()
                if stripped:
                    key, value = _split_assignment(stripped, f"{path}:{lineno}")
                    entries[key] = value
        for item in overrides:
            key, value = _split_assignment(item, "override")
            entries[key] = value
        return cls.from_entries(entries)

    @classmethod
    def from_entries(cls, entries: Dict[str, Any]) -> "RunConfig":
        tree: Dict[str, Dict[str, Any]] = {}
        for key, raw in entries.items():
            section, _, field = key.partition(".")
            if not field or "." in field:
                raise ConfigError(f"config keys look like section.field, got {key!r}")
            tree.setdefault(section, {})[field] = _parse_value(raw)
        try:
            config = cls.model_validate(tree)
        except ValidationError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
        logger.debug(f"Loaded configuration {config.config_hash()[:12]}")
        return config


def _split_assignment(text: str, where: str) -> Tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"{where}: expected key = value, got {text!r}")
    key, value = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"{where}: empty key")
    return key, value.strip()


def _parse_value(raw: Any) -> Any:
    """JSON literals where possible, comma lists, else the bare string."""
    if not isinstance(raw, str):
        return raw
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if "," in raw:
        return [_parse_value(part.strip()) for part in raw.split(",") if part.strip()]
    return raw

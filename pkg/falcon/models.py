"""Data models for Falcon using Pydantic for validation."""

import math
import os
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import ConfigurationError


class EngineConfig(BaseModel):
    """Numeric knobs shared by every module."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Prefractal resources
    depth_cap: int = Field(default=40, ge=0, description="Deepest prefractal level allowed")
    max_intervals: int = Field(
        default=2**22, ge=1, description="Largest prefractal interval list that may be enumerated"
    )

    # Mass extrapolation
    mass_depth: int = Field(default=14, ge=3, description="Finest mesh level used by mass()")
    mass_fit_points: int = Field(default=4, ge=2, description="Meshes used by the slope fit")
    mass_tolerance: float = Field(
        default=1e-9, gt=0, description="Slope band classified as a converged mass"
    )

    # Solver
    disc_tolerance: float = Field(
        default=1e-10, gt=0, description="Relative discriminant tolerance"
    )
    residual_tolerance: float = Field(default=1e-9, gt=0, description="Accepted symbolic residual")
    chop_tolerance: float = Field(default=1e-12, ge=0, description="Relative coefficient cutoff")
    key_decimals: int = Field(default=12, ge=1, description="Decimals used to compare term keys")

    # Numeric calculus
    stencil_depth: int = Field(default=10, ge=4, description="Default derivative stencil depth")
    integral_refinement: int = Field(default=10, ge=1, description="Default integral refinement")
    uniform_cells: int = Field(
        default=2**16, ge=1, description="Largest uniform partition tried by coarse_mass"
    )

    # Processing options
    cache_normalizations: bool = Field(default=False, description="Cache staircase normalizations")
    debug_mode: bool = Field(default=False, description="Enable debug logging")

    @classmethod
    def from_env(cls, **overrides: Any) -> "EngineConfig":
        """Build a config honouring FALCON_DEPTH_CAP and FALCON_MAX_INTERVALS."""
        values: Dict[str, Any] = {}
        for env_name, field_name in (
            ("FALCON_DEPTH_CAP", "depth_cap"),
            ("FALCON_MAX_INTERVALS", "max_intervals"),
        ):
            raw = os.environ.get(env_name)
            if raw is None or raw.strip() == "":
                continue
            try:
                values[field_name] = int(raw)
            except ValueError:
                raise ConfigurationError(f"{env_name} must be an integer, got {raw!r}")
        values.update(overrides)
        return cls(**values)


class CantorSetSpec(BaseModel):
    """A symmetric self-similar Cantor-like subset of [lo, hi]."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    m: int = Field(ge=2, description="Children per level")
    r: float = Field(gt=0, lt=1, description="Contraction ratio per child")
    lo: float = 0.0
    hi: float = 1.0
    alpha: float = Field(default=0.0, description="Similarity dimension ln(m)/ln(1/r)")

    @model_validator(mode="before")
    @classmethod
    def derive_alpha(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        r = data.get("r")
        if isinstance(r, str):
            try:
                r = float(Fraction(r.strip()))
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"r must be a float or a 'p/q' string, got {r!r}")
            data["r"] = r
        m = data.get("m")
        if isinstance(m, int) and isinstance(r, (int, float)) and 0 < r < 1 and m >= 2:
            derived = math.log(m) / math.log(1.0 / r)
            stored = data.get("alpha")
            if stored is not None and abs(float(stored) - derived) > 1e-12:
                raise ValueError(f"alpha={stored} disagrees with ln(m)/ln(1/r)={derived}")
            data["alpha"] = derived
        return data

    @model_validator(mode="after")
    def check_geometry(self) -> "CantorSetSpec":
        if self.m * self.r > 1.0 + 1e-12:
            raise ValueError(f"children overlap: m*r = {self.m * self.r} > 1")
        if not self.lo < self.hi:
            raise ValueError(f"base interval must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        return self

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def spacing(self) -> float:
        """Offset between consecutive children of the unit interval."""
        return (1.0 - self.r) / (self.m - 1)

    @property
    def has_gaps(self) -> bool:
        return self.m * self.r < 1.0 - 1e-12

    @classmethod
    def middle_third(cls) -> "CantorSetSpec":
        return cls(m=2, r=1.0 / 3.0)

    def to_json_dict(self) -> Dict[str, Any]:
        return {"m": self.m, "r": self.r, "lo": self.lo, "hi": self.hi}


class InitialConditions(BaseModel):
    """Initial data f(x0) = f0, D^alpha f(x0) = Df0."""

    model_config = ConfigDict(extra="forbid")

    x0: float = 0.0
    f0: float = 0.0
    Df0: float = 0.0


class ProblemSpec(BaseModel):
    """Problem-spec JSON document accepted by `falcon solve` and `falcon verify`."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    name: Optional[str] = Field(default=None, description="Label used in reports")
    type: Literal["const", "linear"] = "const"

    # Constant coefficients
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None

    # Variable coefficients, profile strings
    P: Optional[str] = None
    Q: Optional[str] = None
    R: Optional[str] = None
    f1: Optional[str] = Field(default=None, description="Known solution for reduction of order")

    g: Optional[str] = Field(default=None, description="Forcing profile string")
    ic: Optional[InitialConditions] = None
    set: Optional[CantorSetSpec] = Field(default=None, description="Fractal support")
    expected: Optional[str] = Field(default=None, description="Claimed solution profile")

    @model_validator(mode="after")
    def check_coefficients(self) -> "ProblemSpec":
        if self.type == "const":
            missing = [k for k in ("a", "b", "c") if getattr(self, k) is None]
            if missing:
                raise ValueError(f"constant-coefficient problem is missing {missing}")
        else:
            missing = [k for k in ("P", "Q", "R") if getattr(self, k) is None]
            if missing:
                raise ValueError(f"linear problem is missing {missing}")
        return self


class RunConfig(BaseModel):
    """Configuration for one CLI invocation."""

    model_config = ConfigDict(extra="forbid")

    command: Literal["staircase", "dimension", "solve", "figure", "verify", "deriv", "integrate"]
    spec_path: Optional[str] = Field(default=None, description="Set or problem JSON file")
    output_path: Optional[str] = Field(default=None, description="Output file path")
    samples: int = Field(default=2001, ge=2, description="Sample count for grids")
    alpha_list: List[float] = Field(default_factory=lambda: [0.5, 0.63, 0.8, 1.0])
    mode: Literal["exact", "power", "both"] = "both"
    seed: int = 0
    figure: Optional[int] = Field(default=None, ge=1, le=7)
    exact: bool = Field(default=False, description="Use the exact staircase in figures")

    @field_validator("alpha_list")
    @classmethod
    def check_alphas(cls, v: List[float]) -> List[float]:
        for alpha in v:
            if not 0.0 < alpha <= 1.0:
                raise ValueError(f"alpha values must lie in (0, 1], got {alpha}")
        return v


class MassReport(BaseModel):
    """Coarse-grained masses over a mesh sequence and their extrapolated limit."""

    alpha_used: float
    delta_sequence: List[float] = Field(default_factory=list)
    gamma_delta_values: List[float] = Field(default_factory=list)
    gamma_limit: float = 0.0
    log_ratio: float = 0.0
    status: Literal["converged", "zero", "divergent", "unconverged"] = "unconverged"
    dim_estimate: Optional[float] = None
    dim_width: Optional[float] = None


class DimensionEstimate(BaseModel):
    """Bisection bracket for the gamma-dimension."""

    value: float
    lower: float
    upper: float
    iterations: int = 0

    @property
    def width(self) -> float:
        return self.upper - self.lower


class NormSample(BaseModel):
    x: float
    s: float
    norm: float
    lower: float
    upper: float


class NormBoundReport(BaseModel):
    """Samples of ||psi|| against the exponential envelope."""

    k: float
    bound_constant_used: float
    samples: List[NormSample] = Field(default_factory=list)
    all_within: bool = True
    strict: bool = False


class CheckResult(BaseModel):
    problem: str
    check: str
    passed: bool
    value: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


class VerificationStats(BaseModel):
    """Statistics for a verification run."""

    total_problems: int = 0
    total_checks: int = 0
    passed_checks: int = 0
    failed_checks: int = 0
    processing_time: float = 0.0
    results: List[CheckResult] = Field(default_factory=list)
    errors: List[Dict[str, str]] = Field(default_factory=list)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

# =============================================================================
# RUN CONFIGURATION
# =============================================================================
"""
Validated run configuration: strip, contour, tolerances, cutoff and outputs.

The JSON document mirrors these models one to one; see
config/config_wedgetrace.json for the shipped defaults.
"""

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)


class ContourKind(str, Enum):
    """Supported closed contour shapes."""
    CIRCLE = "circle"
    ELLIPSE = "ellipse"
    RECTANGLE = "rectangle"


class StripConfig(BaseModel):
    """Weight γ and order m defining Σ = {γ − m < Im σ < γ}."""
    gamma: float = Field(1.0, description="Weight γ")
    order: int = Field(2, ge=1, description="Operator order m")


class ContourConfig(BaseModel):
    """Contour placement; unused extents are ignored for the chosen kind.

    Leaving the radius unset selects the inscribed circle of the strip.
    """
    kind: ContourKind = ContourKind.CIRCLE
    center: List[float] = Field(default_factory=lambda: [0.0, 0.0], min_length=2, max_length=2)
    radius: Optional[float] = Field(None, gt=0, description="Circle radius / ellipse real semi-axis")
    radius_imag: Optional[float] = Field(None, gt=0, description="Ellipse imaginary semi-axis")
    half_width: Optional[float] = Field(None, gt=0, description="Rectangle half extent along Re")
    half_height: Optional[float] = Field(None, gt=0, description="Rectangle half extent along Im")
    nodes: int = Field(256, ge=16, description="Quadrature node count")

    @property
    def center_complex(self) -> complex:
        return complex(self.center[0], self.center[1])


class ToleranceConfig(BaseModel):
    """Numerical tolerances; all strictly positive."""
    rank_tol: float = Field(1e-10, gt=0)
    residual_tol: float = Field(1e-6, gt=0)
    match_tol: float = Field(1e-7, gt=0)
    pole_merge_tol: float = Field(1e-6, gt=0)
    min_pole_radius: float = Field(1e-6, gt=0)


class CutoffConfig(BaseModel):
    """Plateau and support ends of the smoothstep cutoff ω."""
    plateau_end: float = Field(0.5, gt=0)
    support_end: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> "CutoffConfig":
        if not self.plateau_end < self.support_end:
            raise ValueError("plateau_end must be smaller than support_end")
        return self


class DefaultsConfig(BaseModel):
    """Default discretization parameters."""
    contour_nodes: int = Field(256, ge=16)
    delta: float = Field(0.25, gt=0, lt=1, description="δ for admissible decompositions")
    fd_step: float = Field(1e-4, gt=0)
    pairing_nodes: int = Field(48, ge=8)
    y_grid: int = Field(64, ge=1)
    condition_bound: float = Field(1e6, gt=1)
    base_points: List[float] = Field(
        default_factory=lambda: [math.pi / 4.0, math.pi / 2.0], min_length=2,
        description="Base points of the two continued frames",
    )
    sobolev_orders: List[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0], min_length=1)


class OutputConfig(BaseModel):
    """Output directory and number formatting."""
    directory: str = "outputs"
    float_format: str = "%.12e"


class RunConfig(BaseModel):
    """Complete validated run configuration."""
    strip: StripConfig = Field(default_factory=StripConfig)
    contour: ContourConfig = Field(default_factory=ContourConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    cutoff: CutoffConfig = Field(default_factory=CutoffConfig)
    defaults: DefaultsConfig = Field(default_factory=DefaultsConfig)
    outputs: OutputConfig = Field(default_factory=OutputConfig)
    fixture: Optional[str] = None
    operator: Optional[dict] = Field(None, description="Operator spec document (see cli.schemas)")

    @field_validator("fixture")
    @classmethod
    def _fixture_name(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and not value.strip():
            raise ValueError("fixture name must be non-empty")
        return value


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a UTF-8 JSON run configuration.

    Raises:
        pydantic.ValidationError: when the document violates the schema.
        json.JSONDecodeError: when the file is not JSON.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        raw = json.load(fh)
    config = RunConfig.model_validate(raw)
    logger.info(f"Run configuration loaded from {path}")
    return config

# =============================================================================
# PYDANTIC SCHEMAS / MODELS
# =============================================================================
"""
Input documents (custom operators) and output documents (frames, reports,
diagnostics) of the command-line front end.
"""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.wedgetrace.core import MatrixPolyFamily, Strip, TrigPoly
from src.wedgetrace.fixtures import (
    ClassicalExample,
    Fixture,
    LineBundleExample,
    classical_example,
    classical_family,
    line_bundle_family,
)


# =============================================================================
# ENUMS
# =============================================================================

class Command(str, Enum):
    """Commands exposed by the CLI."""
    SPECTRUM = "spectrum"
    FRAME = "frame"
    PAIRING = "pairing"
    VARORDER = "varorder"
    SYMBOL = "symbol"
    FIXTURE = "fixture"
    CHECK = "check"


class OperatorKind(str, Enum):
    """Ways of describing a custom operator in the run configuration."""
    FAMILY = "family"
    LINEBUNDLE = "linebundle"
    CLASSICAL = "classical"


# =============================================================================
# OPERATOR DOCUMENTS
# =============================================================================

class TrigEntry(BaseModel):
    """a0 + Σ_k cos_k cos(ky) + sin_k sin(ky), with complex a0."""
    a0: float = 0.0
    a0_imag: float = 0.0
    cos: List[float] = Field(default_factory=list)
    sin: List[float] = Field(default_factory=list)

    def to_poly(self) -> TrigPoly:
        return TrigPoly.scalar(complex(self.a0, self.a0_imag), cos=self.cos, sin=self.sin)


Entry = Union[float, TrigEntry]


def _entry_poly(entry: Entry) -> TrigPoly:
    return entry.to_poly() if isinstance(entry, TrigEntry) else TrigPoly.constant(float(entry))


class FamilyDocument(BaseModel):
    """F(y, σ) = Σ_j C_j(y) σ^j given entry by entry, lowest σ power first."""
    coefficients: List[List[List[Entry]]] = Field(..., min_length=1, description="C_0, C_1, ... as square matrices")
    gamma: float = Field(..., description="Weight γ of the strip")
    order: int = Field(..., ge=1, description="Order m of the strip")
    label: str = "custom"

    @model_validator(mode="after")
    def _square(self) -> "FamilyDocument":
        size = len(self.coefficients[0])
        for k, matrix in enumerate(self.coefficients):
            if len(matrix) != size or any(len(row) != size for row in matrix):
                raise ValueError(f"coefficient {k} must be a {size}×{size} matrix")
        return self

    def build(self) -> MatrixPolyFamily:
        coeffs = tuple(
            TrigPoly.matrix([[_entry_poly(e) for e in row] for row in matrix])
            for matrix in self.coefficients
        )
        return MatrixPolyFamily(coeffs, label=self.label)


class LineBundleDocument(BaseModel):
    """Line-bundle example: φ_ij on Y and the fiber eigenvalues λ_k."""
    phi11: TrigEntry
    phi12: TrigEntry
    phi21: TrigEntry = Field(default_factory=TrigEntry)
    phi22: TrigEntry
    eigenvalues: List[float] = Field(..., min_length=1)
    gamma: float = 1.0
    label: str = "linebundle-custom"

    def build(self) -> LineBundleExample:
        return LineBundleExample(
            self.phi11.to_poly(), self.phi12.to_poly(), self.phi21.to_poly(), self.phi22.to_poly(),
            tuple(self.eigenvalues), self.gamma, self.label,
        )


class ClassicalDocument(BaseModel):
    """Classical operator of order m with identity leading coefficient."""
    order: int = Field(..., ge=1)
    rank: int = Field(1, ge=1)
    gamma: float = 0.5

    def build(self) -> ClassicalExample:
        return classical_example(self.order, self.rank, self.gamma)


class OperatorDocument(BaseModel):
    """Custom operator; exactly the section named by ``kind`` is required."""
    kind: OperatorKind
    family: Optional[FamilyDocument] = None
    linebundle: Optional[LineBundleDocument] = None
    classical: Optional[ClassicalDocument] = None

    @model_validator(mode="after")
    def _section_present(self) -> "OperatorDocument":
        if getattr(self, self.kind.value) is None:
            raise ValueError(f"operator of kind {self.kind.value!r} needs a {self.kind.value!r} section")
        return self

    def to_fixture(self) -> Fixture:
        if self.kind == OperatorKind.FAMILY:
            doc = self.family
            return Fixture(doc.label, "custom indicial family", doc, doc.build(), Strip(doc.gamma, doc.order))
        if self.kind == OperatorKind.LINEBUNDLE:
            ex = self.linebundle.build()
            return Fixture(ex.label, "custom line-bundle example", ex, line_bundle_family(ex), ex.strip)
        ex = self.classical.build()
        return Fixture(ex.label, "custom classical operator", ex, classical_family(ex), ex.strip)


# =============================================================================
# OUTPUT DOCUMENTS
# =============================================================================

class Diagnostic(BaseModel):
    """Single-line error report written to standard error."""
    error: str
    message: str
    context: Dict[str, Any] = Field(default_factory=dict)


class TraceTermOut(BaseModel):
    sigma: Tuple[float, float] = Field(..., description="[Re σ, Im σ]")
    ell: int
    coeff: List[Tuple[float, float]] = Field(..., description="[Re c_k, Im c_k] per component")


class FrameOut(BaseModel):
    """Trace frame over the y grid; elements[i][j] lists the terms of χ_j(y_i)."""
    fixture: str
    provenance: str
    base_point: Optional[float] = None
    rank: int
    y_grid: List[float]
    elements: List[List[List[TraceTermOut]]]


class SmoothnessOut(BaseModel):
    """Transition coefficients between two continued frames."""
    fixture: str
    base_points: List[float]
    collisions: List[float]
    max_second_difference: float
    median_second_difference: float
    off_collision_median: float
    ratio_to_off_collision_median: float
    max_condition: float
    cutoff_relative_difference: float
    finite_specb: bool


class FixtureOut(BaseModel):
    name: str
    description: str
    strip: Optional[Dict[str, float]] = None
    details: Dict[str, Any] = Field(default_factory=dict)


class CriterionResult(BaseModel):
    """Outcome of one acceptance criterion."""
    criterion: int
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""


class AcceptanceOut(BaseModel):
    suite: str
    passed: bool
    results: List[CriterionResult]


def complex_pair(value: complex) -> List[float]:
    value = complex(value)
    return [float(value.real), float(value.imag)]


def array_pairs(values) -> List[List[float]]:
    return [complex_pair(v) for v in np.ravel(values)]

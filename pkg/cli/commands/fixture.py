# =============================================================================
# COMMAND - FIXTURE
# =============================================================================
"""
Dump of a fixture with its closed-form reference data (fixture.json).
"""

import logging
from typing import Any, Dict

import numpy as np

from src.wedgetrace.core import TrigPoly
from src.wedgetrace.fixtures import (
    COLLISION_TOL,
    ClassicalExample,
    LineBundleExample,
    closed_form_spectrum,
    collision_frame_reference,
    disk_graph_ratios,
    disk_norm_witness,
)
from src.wedgetrace.trace import to_trace_element

from ..schemas import FixtureOut, TraceTermOut, array_pairs, complex_pair
from ..services import ArtifactSet, RunContext, stage

logger = logging.getLogger(__name__)

WITNESS_MODES = (8, 16, 32, 64)
GRAPH_MODES = 16


def trig_document(poly: TrigPoly) -> Dict[str, Any]:
    return {"frequencies": [int(k) for k in poly.frequencies], "coefficients": array_pairs(poly.coeffs)}


def _singular_part_document(sp) -> list:
    return [
        TraceTermOut(sigma=complex_pair(t.sigma), ell=int(t.ell), coeff=array_pairs(t.coeff)).model_dump()
        for t in to_trace_element(sp).terms
    ]


def line_bundle_details(ex: LineBundleExample, grid: np.ndarray) -> Dict[str, Any]:
    details: Dict[str, Any] = {
        "eigenvalues": list(ex.eigenvalues),
        "gamma": ex.gamma,
        "phi11": trig_document(ex.phi11),
        "phi12": trig_document(ex.phi12),
        "phi21": trig_document(ex.phi21),
        "phi22": trig_document(ex.phi22),
        "validated_regime": ex.in_validated_regime(),
    }
    if not ex.upper_triangular:
        return details
    details["closed_form_spectrum"] = [
        {"y": float(y), "roots": [complex_pair(s) for s in closed_form_spectrum(ex, y)]} for y in grid
    ]
    collisions = [float(y) for y in grid if abs(complex(ex.phi11(y)) - complex(ex.phi22(y))) <= COLLISION_TOL]
    details["collision_references"] = [
        {
            "y": y,
            "printed": [_singular_part_document(sp) for sp in collision_frame_reference(ex, y, "printed")],
            "oracle": [_singular_part_document(sp) for sp in collision_frame_reference(ex, y, "oracle")],
        }
        for y in collisions
    ]
    return details


def classical_details(ex: ClassicalExample) -> Dict[str, Any]:
    return {
        "order": ex.order,
        "rank": ex.rank,
        "gamma": ex.gamma,
        "roots": [complex_pair(-1j * j) for j in range(ex.order)],
        "xdx_eigenvalues": list(range(ex.order)),
    }


def disk_details() -> Dict[str, Any]:
    with stage("disk_witness"):
        reports = [disk_norm_witness(n) for n in WITNESS_MODES]
    return {
        "brackets": [{"modes": r.modes, "lower": r.lower, "upper": r.upper} for r in reports],
        "graph_ratios": [float(v) for v in disk_graph_ratios(GRAPH_MODES)],
    }


def run(ctx: RunContext) -> ArtifactSet:
    fixture = ctx.fixture
    example = fixture.example
    if isinstance(example, LineBundleExample):
        details = line_bundle_details(example, ctx.y_grid)
    elif isinstance(example, ClassicalExample):
        details = classical_details(example)
    elif fixture.family is None:
        details = disk_details()
    else:
        details = {"coefficients_at_0": array_pairs(fixture.family.coefficients(0.0))}
    if fixture.order_field is not None:
        details["order_field"] = trig_document(fixture.order_field.matrix)
    strip = None if fixture.strip is None else {"gamma": fixture.strip.gamma, "order": fixture.strip.order}
    artifacts = ctx.artifacts()
    artifacts.add_json("fixture.json", FixtureOut(name=fixture.name, description=fixture.description,
                                                   strip=strip, details=details))
    return artifacts

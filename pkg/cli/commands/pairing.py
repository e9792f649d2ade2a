# =============================================================================
# COMMAND - PAIRING
# =============================================================================
"""
Pairing matrices between the continued frame and the adjoint frame
(pairing.csv), and the smoothness of the transition between two continued
frames (smoothness.json).
"""

import logging
import warnings

import pandas as pd

from src.wedgetrace.errors import MatchingAmbiguity
from src.wedgetrace.pairing import adjoint_family, cutoff_independence, pairing_matrix, transition_smoothness
from src.wedgetrace.spectra import check_finite_specb, collision_points, spectrum_curve

from ..schemas import SmoothnessOut
from ..services import ArtifactSet, RunContext, off_collision_ratio, stage

logger = logging.getLogger(__name__)


def run(ctx: RunContext) -> ArtifactSet:
    family, strip = ctx.family, ctx.strip
    defaults = ctx.config.defaults
    first_base, second_base = defaults.base_points[0], defaults.base_points[1]
    cutoff, other_cutoff = ctx.cutoffs()
    nodes = defaults.pairing_nodes

    specb = check_finite_specb(family, ctx.y_grid, strip)
    if not specb.passed:
        logger.warning("Spectrum meets the strip boundary; pairing matrices may be singular")
    adjoint = adjoint_family(family, strip.order, strip.gamma)
    frame_a = ctx.continued_frame(first_base)
    frame_b = ctx.continued_frame(second_base)
    adjoint_frame = ctx.continued_frame(first_base, family=adjoint)

    def pair_at(i: int):
        return pairing_matrix(family, frame_a.y_grid[i], frame_a.elements[i], adjoint_frame.elements[i],
                              cutoff, strip, nodes)

    with stage("pairing_matrices"):
        matrices = ctx.pool.map(pair_at, range(len(frame_a.y_grid)))
    rows = []
    for G in matrices:
        for j in range(G.matrix.shape[0]):
            for l in range(G.matrix.shape[1]):
                value = G.matrix[j, l]
                rows.append({"y": G.y, "row": j, "col": l, "re": value.real, "im": value.imag,
                             "condition": G.condition})

    with stage("transition_smoothness"):
        report = transition_smoothness(family, frame_a, frame_b, adjoint_frame, cutoff, strip, nodes,
                                       defaults.condition_bound, mapper=ctx.pool.map)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MatchingAmbiguity)
        collisions = collision_points(spectrum_curve(family, ctx.y_grid, strip, mapper=ctx.pool.map))
    summary = off_collision_ratio(report.second_differences, report.y_grid, collisions)
    with stage("cutoff_independence"):
        spread = cutoff_independence(family, frame_a.y_grid[0], frame_a.elements[0], adjoint_frame.elements[0],
                                     cutoff, other_cutoff, strip, nodes)

    smoothness = SmoothnessOut(
        fixture=ctx.fixture.name,
        base_points=[float(first_base), float(second_base)],
        collisions=collisions,
        max_second_difference=report.max_second_difference,
        median_second_difference=report.median_second_difference,
        off_collision_median=summary["median"],
        ratio_to_off_collision_median=summary["ratio"],
        max_condition=report.max_condition,
        cutoff_relative_difference=spread,
        finite_specb=specb.passed,
    )
    logger.info(f"Pairing: max condition {report.max_condition:.3e}, cutoff spread {spread:.3e}")
    artifacts = ctx.artifacts()
    artifacts.add_csv("pairing.csv", pd.DataFrame(rows, columns=["y", "row", "col", "re", "im", "condition"]))
    artifacts.add_json("smoothness.json", smoothness)
    return artifacts

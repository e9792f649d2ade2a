# =============================================================================
# COMMAND - SPECTRUM
# =============================================================================
"""
Edge spectrum over the y grid from both solvers, written to spectrum.csv.
"""

import logging
import warnings

import pandas as pd

from src.wedgetrace.errors import MatchingAmbiguity
from src.wedgetrace.spectra import SolverMethod, check_finite_specb, spectrum_curve

from ..services import ArtifactSet, RunContext, stage

logger = logging.getLogger(__name__)

COLUMNS = [
    "y", "re_sigma", "im_sigma", "mult", "partials", "residual", "method", "curve_id", "collision_flag",
]


def spectrum_table(ctx: RunContext) -> pd.DataFrame:
    """One row per tracked root and grid point, companion rows first.

    ``partials`` holds the Jordan partial multiplicities joined by ";".
    """
    family, strip, grid = ctx.family, ctx.strip, ctx.y_grid
    contour = ctx.contour()
    match_tol = ctx.config.tolerances.match_tol
    rows = []
    flagged = 0
    for method in (SolverMethod.COMPANION, SolverMethod.CONTOUR):
        with stage(f"spectrum.{method.value}"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", MatchingAmbiguity)
                curves = spectrum_curve(family, grid, strip, solver=method.value, contour=contour,
                                        match_tol=match_tol, mapper=ctx.pool.map)
        for curve in curves:
            collisions = set(curve.collisions)
            for y, point in curve.samples:
                flagged += not point.residual_ok
                rows.append({
                    "y": y,
                    "re_sigma": point.sigma.real,
                    "im_sigma": point.sigma.imag,
                    "mult": point.algebraic,
                    "partials": ";".join(str(p) for p in point.partials),
                    "residual": point.residual,
                    "method": method.value,
                    "curve_id": curve.curve_id,
                    "collision_flag": y in collisions,
                })
            if curve.ambiguities:
                logger.warning(f"Curve {curve.curve_id} ({method.value}) ambiguous at {len(curve.ambiguities)} points")
    if flagged:
        logger.warning(f"{flagged} spectrum rows have residuals above residual_tol")
    table = pd.DataFrame(rows, columns=COLUMNS)
    return table.sort_values(["method", "curve_id", "y"], kind="mergesort").reset_index(drop=True)


def run(ctx: RunContext) -> ArtifactSet:
    report = check_finite_specb(ctx.family, ctx.y_grid, ctx.strip)
    if not report.passed:
        logger.warning(f"Spectrum meets the strip boundary at {len(report.offending)} points")
    artifacts = ctx.artifacts()
    artifacts.add_csv("spectrum.csv", spectrum_table(ctx))
    return artifacts

# =============================================================================
# COMMAND - SYMBOL
# =============================================================================
"""
Symbol estimates for ⟨η⟩^{a(y)} on δ-admissible intervals (symbol_estimates.csv).
"""

import logging

import pandas as pd

from src.wedgetrace.varorder import symbol_estimate_check

from ..services import ArtifactSet, RunContext, stage

logger = logging.getLogger(__name__)

COLUMNS = ["base_point", "alpha", "beta", "fitted_slope", "bound", "constant", "pass"]


def run(ctx: RunContext) -> ArtifactSet:
    defaults = ctx.config.defaults
    field = ctx.order_field()
    with stage("symbol_estimates"):
        rows = symbol_estimate_check(field, delta=defaults.delta, fd_step=defaults.fd_step,
                                     nodes=ctx.contour_nodes, mapper=ctx.pool.map)
    failed = [r for r in rows if not r.passed]
    if failed:
        logger.warning(f"{len(failed)} of {len(rows)} symbol estimates above their bound")
    table = pd.DataFrame(
        [[r.base_point, r.alpha, r.beta, r.fitted_slope, r.bound, r.constant, r.passed] for r in rows],
        columns=COLUMNS,
    )
    artifacts = ctx.artifacts()
    artifacts.add_csv("symbol_estimates.csv", table)
    return artifacts

# =============================================================================
# COMMAND - VARORDER
# =============================================================================
"""
Variable-order norms of a boundary section (norms.csv) and matrix powers of
the order field along the grid (matrix_powers.csv).

The section is read from --section (columns y, re_k, im_k per component on
the uniform grid) or defaults to u_k(y) = cos((k+1)y).
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.wedgetrace.varorder import HOMOGENEITY_RHOS, matrix_power_batch, trace_sobolev_norm, varorder_norm

from ..services import ArtifactSet, RunContext, stage, uniform_grid

logger = logging.getLogger(__name__)


def read_section(path: Path, rank: int) -> np.ndarray:
    """Samples (N, rank) from a CSV with columns y, re_0, im_0, re_1, im_1, ..."""
    table = pd.read_csv(path)
    missing = [c for k in range(rank) for c in (f"re_{k}", f"im_{k}") if c not in table.columns]
    if "y" not in table.columns or missing:
        raise ValueError(f"section file {path} lacks columns {(['y'] if 'y' not in table.columns else []) + missing}")
    n = len(table)
    if not np.allclose(table["y"].to_numpy(dtype=float), uniform_grid(n), atol=1e-9):
        raise ValueError("section samples must sit on the uniform grid y_j = 2πj/N")
    return np.stack([table[f"re_{k}"].to_numpy(float) + 1j * table[f"im_{k}"].to_numpy(float)
                     for k in range(rank)], axis=1)


def default_section(n: int, rank: int) -> np.ndarray:
    y = uniform_grid(n)
    return np.stack([np.cos((k + 1) * y) for k in range(rank)], axis=1).astype(complex)


def section_for(ctx: RunContext, rank: int, path: Optional[Path]) -> np.ndarray:
    if path is not None:
        section = read_section(path, rank)
        if section.shape[0] != ctx.grid_size:
            raise ValueError(f"section has {section.shape[0]} samples, grid has {ctx.grid_size}")
        return section
    return default_section(ctx.grid_size, rank)


def run(ctx: RunContext) -> ArtifactSet:
    nodes = ctx.contour_nodes
    orders = ctx.config.defaults.sobolev_orders
    frame = ctx.continued_frame(ctx.config.defaults.base_points[0])
    rows = []
    section = section_for(ctx, frame.rank, ctx.section_path)
    with stage("trace_sobolev_norms"):
        for s in orders:
            value = trace_sobolev_norm(section, frame, s, nodes=nodes, mapper=ctx.pool.map)
            rows.append({"kind": "trace", "s": s, "norm": value})

    field = ctx.order_field(frame)
    if ctx.fixture.order_field is not None:
        field_section = section_for(ctx, field.rank, None)
        with stage("varorder_norms"):
            for s in orders:
                value = varorder_norm(field_section, field, s=s, nodes=nodes, mapper=ctx.pool.map)
                rows.append({"kind": "field", "s": s, "norm": value})

    powers = []
    with stage("matrix_powers"):
        results = ctx.pool.map(lambda y: matrix_power_batch(field(y), HOMOGENEITY_RHOS, nodes=nodes), ctx.y_grid)
    for y, batch in zip(ctx.y_grid, results):
        for rho, P in zip(HOMOGENEITY_RHOS, batch):
            for (i, j), value in np.ndenumerate(P):
                powers.append({"y": y, "rho": rho, "row": i, "col": j, "re": value.real, "im": value.imag})

    artifacts = ctx.artifacts()
    artifacts.add_csv("norms.csv", pd.DataFrame(rows, columns=["kind", "s", "norm"]))
    artifacts.add_csv("matrix_powers.csv", pd.DataFrame(powers, columns=["y", "rho", "row", "col", "re", "im"]))
    return artifacts

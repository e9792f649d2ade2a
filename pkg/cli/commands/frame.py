# =============================================================================
# COMMAND - FRAME
# =============================================================================
"""
Continued trace frame (frame.json) and the x∂_x eigenvalues along it
(xdx_eigenvalues.csv).
"""

import logging

import numpy as np
import pandas as pd

from src.wedgetrace.core import sort_key
from src.wedgetrace.trace import xdx_endomorphism

from ..services import ArtifactSet, RunContext, frame_document, stage

logger = logging.getLogger(__name__)


def xdx_table(frame) -> pd.DataFrame:
    rows = []
    with stage("xdx_eigenvalues"):
        for y, elements in zip(frame.y_grid, frame.elements):
            values = sorted(np.linalg.eigvals(xdx_endomorphism(elements)), key=sort_key)
            for k, value in enumerate(values):
                rows.append({"y": y, "index": k, "re": value.real, "im": value.imag})
    return pd.DataFrame(rows, columns=["y", "index", "re", "im"])


def run(ctx: RunContext) -> ArtifactSet:
    base_point = ctx.config.defaults.base_points[0]
    frame = ctx.continued_frame(base_point)
    artifacts = ctx.artifacts()
    artifacts.add_json("frame.json", frame_document(ctx.fixture.name, frame))
    artifacts.add_csv("xdx_eigenvalues.csv", xdx_table(frame))
    return artifacts

# =============================================================================
# CLI SERVICES
# =============================================================================
"""
Orchestration services shared by the commands: the worker pool, the run
context (configuration, fixture, strip, grid), stage timing, and staged
artifacts written atomically once a command has succeeded.
"""

import io
import json
import logging
import os
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel

from src.wedgetrace.config import RunConfig
from src.wedgetrace.core import Contour, MatrixPolyFamily, Strip
from src.wedgetrace.fixtures import Fixture, get_fixture
from src.wedgetrace.pairing import Cutoff
from src.wedgetrace.trace import TraceFrame, frame_continuation, xdx_endomorphism
from src.wedgetrace.varorder import EndomorphismField

from .config import Settings
from .schemas import FrameOut, OperatorDocument, TraceTermOut, array_pairs, complex_pair

logger = logging.getLogger(__name__)


# =============================================================================
# WORKER POOL
# =============================================================================

class WorkerPool:
    """Order-preserving parallel map over joblib threads."""

    def __init__(self, threads: int = 1):
        self.threads = max(int(threads), 1)

    def map(self, fn: Callable, items: Iterable) -> List[Any]:
        items = list(items)
        if self.threads == 1 or len(items) < 2:
            return [fn(item) for item in items]
        return Parallel(n_jobs=self.threads, prefer="threads")(delayed(fn)(item) for item in items)


# =============================================================================
# STAGE TIMING
# =============================================================================

@contextmanager
def stage(name: str, **fields):
    """Log the wall time of a pipeline stage as one event."""
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    logger.info(f"Stage {name} finished in {elapsed:.3f}s", extra={"stage": name, "wall_time": elapsed, **fields})


# =============================================================================
# ARTIFACTS
# =============================================================================

def atomic_write(path: Path, payload: bytes) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def render_csv(frame: pd.DataFrame, float_format: str) -> bytes:
    """UTF-8 CSV, CRLF line ends, fixed float format."""
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=float_format, lineterminator="\r\n")
    return buffer.getvalue().encode("utf-8")


def render_json(document: Any) -> bytes:
    if isinstance(document, BaseModel):
        document = document.model_dump(mode="json")
    return (json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


@dataclass
class ArtifactSet:
    """Rendered outputs, held in memory until the command succeeds."""

    float_format: str = "%.12e"
    files: Dict[str, bytes] = field(default_factory=dict)
    exit_code: int = 0

    def add_csv(self, name: str, frame: pd.DataFrame) -> None:
        self.files[name] = render_csv(frame, self.float_format)

    def add_json(self, name: str, document: Any) -> None:
        self.files[name] = render_json(document)

    def commit(self, directory: Path) -> List[Path]:
        written = []
        for name in sorted(self.files):
            path = Path(directory) / name
            atomic_write(path, self.files[name])
            written.append(path)
        logger.info(f"Wrote {len(written)} output files to {directory}")
        return written


# =============================================================================
# RUN CONTEXT
# =============================================================================

def parse_strip(text: str) -> Strip:
    """'γ,m' → Strip."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ValueError(f"--strip expects 'gamma,m', got {text!r}")
    gamma, order = float(parts[0]), float(parts[1])
    if order != int(order):
        raise ValueError(f"strip order must be an integer, got {parts[1]!r}")
    return Strip(gamma, int(order))


def uniform_grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


@dataclass
class RunContext:
    """Everything a command needs: validated config, overrides and the worker pool."""

    config: RunConfig
    settings: Settings
    pool: WorkerPool
    out_dir: Path
    fixture_name: Optional[str] = None
    strip_override: Optional[Strip] = None
    grid: Optional[int] = None
    nodes: Optional[int] = None
    suite: str = "paper"
    section_path: Optional[Path] = None
    _fixture: Optional[Fixture] = field(default=None, repr=False)

    # -------------------------------------------------------------------------
    # Resolution of overrides
    # -------------------------------------------------------------------------
    @property
    def grid_size(self) -> int:
        return int(self.grid or self.config.defaults.y_grid)

    @property
    def contour_nodes(self) -> int:
        return int(self.nodes or self.config.defaults.contour_nodes)

    @property
    def y_grid(self) -> np.ndarray:
        return uniform_grid(self.grid_size)

    @property
    def float_format(self) -> str:
        return self.config.outputs.float_format

    def artifacts(self) -> ArtifactSet:
        return ArtifactSet(self.float_format)

    @property
    def fixture(self) -> Fixture:
        """--fixture, then the config's fixture name, then its operator document."""
        if self._fixture is None:
            name = self.fixture_name or self.config.fixture
            if name:
                self._fixture = get_fixture(name)
            elif self.config.operator is not None:
                self._fixture = OperatorDocument.model_validate(self.config.operator).to_fixture()
            else:
                raise ValueError("no fixture or operator given (use --fixture or the config file)")
            logger.info(f"Using fixture {self._fixture.name}")
        return self._fixture

    @property
    def family(self) -> MatrixPolyFamily:
        family = self.fixture.family
        if family is None:
            raise ValueError(f"fixture {self.fixture.name!r} has no indicial family")
        return family

    @property
    def strip(self) -> Strip:
        """--strip, then an explicit config strip, then the fixture's own strip."""
        if self.strip_override is not None:
            return self.strip_override
        if "strip" in self.config.model_fields_set or self.fixture.strip is None:
            return Strip(self.config.strip.gamma, self.config.strip.order)
        return self.fixture.strip

    def contour(self) -> Contour:
        cfg = self.config.contour
        if self.nodes:
            cfg = cfg.model_copy(update={"nodes": int(self.nodes)})
        return Contour.from_config(cfg, self.strip)

    def cutoffs(self):
        """The configured cutoff and a second one for independence checks."""
        cfg = self.config.cutoff
        first = Cutoff(cfg.plateau_end, cfg.support_end)
        second = Cutoff(0.6 * cfg.plateau_end, 0.8 * cfg.support_end)
        return first, second

    # -------------------------------------------------------------------------
    # Shared computations
    # -------------------------------------------------------------------------
    def continued_frame(self, base_point: float, family: Optional[MatrixPolyFamily] = None) -> TraceFrame:
        tol = self.config.tolerances
        family = family or self.family
        with stage("frame_continuation", y=float(base_point)):
            return frame_continuation(
                family, base_point, self.y_grid, self.strip,
                rank_tol=tol.rank_tol, pole_merge_tol=tol.pole_merge_tol,
                min_pole_radius=tol.min_pole_radius, mapper=self.pool.map,
            )

    def order_field(self, frame: Optional[TraceFrame] = None) -> EndomorphismField:
        """The fixture's own endomorphism field, else x∂_x of its continued frame."""
        if self.fixture.order_field is not None:
            return self.fixture.order_field
        frame = frame or self.continued_frame(self.config.defaults.base_points[0])
        return xdx_field(frame)


def xdx_field(frame: TraceFrame) -> EndomorphismField:
    X = np.stack([xdx_endomorphism(elements) for elements in frame.elements])
    return EndomorphismField.from_samples(X, label="x∂_x")


def frame_document(name: str, frame: TraceFrame) -> FrameOut:
    elements = [
        [
            [
                TraceTermOut(
                    sigma=complex_pair(t.sigma), ell=int(t.ell),
                    coeff=array_pairs(t.coeff),
                )
                for t in element.terms
            ]
            for element in fiber
        ]
        for fiber in frame.elements
    ]
    return FrameOut(
        fixture=name, provenance=frame.provenance.value, base_point=frame.base_point,
        rank=frame.rank, y_grid=[float(y) for y in frame.y_grid], elements=elements,
    )


def off_collision_ratio(second_differences: np.ndarray, y_grid: Sequence[float],
                        collisions: Sequence[float], window: int = 2) -> Dict[str, float]:
    """Max second difference against the median taken away from collisions.

    Difference i is centred at y_{i+1}; points within ``window`` grid steps
    (circular) of a collision are left out of the median.
    """
    magnitudes = np.max(np.abs(second_differences), axis=(1, 2)) if second_differences.size else np.zeros(0)
    if magnitudes.size == 0:
        return {"max": 0.0, "median": 0.0, "ratio": 0.0}
    y_grid = np.asarray(y_grid, dtype=float)
    step = 2.0 * np.pi / len(y_grid)
    centers = y_grid[1:-1]
    far = np.ones(centers.size, dtype=bool)
    for c in collisions:
        d = np.abs((centers - c + np.pi) % (2.0 * np.pi) - np.pi)
        far &= d > window * step + 1e-12
    median = float(np.median(magnitudes[far])) if np.any(far) else float(np.median(magnitudes))
    top = float(np.max(magnitudes))
    ratio = top / median if median > 0.0 else (0.0 if top == 0.0 else float("inf"))
    return {"max": top, "median": median, "ratio": ratio}

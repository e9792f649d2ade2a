# =============================================================================
# VARIABLE ORDER CALCULUS
# =============================================================================
"""
Endomorphism-valued orders over the parameter circle Y = ℝ/2πℤ.

    - matrix_power: ϱ^a = (1/2πi)∮ ϱ^σ (σ - a)^{-1} dσ, trapezoid on a circle;
    - admissible_decomposition: δ-clusters of the spectrum of a(y₀), Riesz projections,
      validity interval U grown by scanning and bisection;
    - symbol_estimate_check: fitted log-log slopes of the S_{1,δ} estimates
      for ⟨η⟩^{a(y)} in the frame adapted to the decomposition;
    - varorder_norm: Kohn-Nirenberg quantization of ⟨η⟩^{a(y)+s} on the
      discrete torus;
    - trace_sobolev_norm: the same norm with order s - x∂_x on a trace frame.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import DEFAULT_NODES, Contour, TrigPoly, cluster_points
from .errors import AliasingError, ClusteringImpossible, ContourTooTight, FiniteDifferenceInstability
from .trace import TraceFrame, xdx_endomorphism

logger = logging.getLogger(__name__)

DELTA = 0.25
FD_STEP = 1e-4
SLOPE_MARGIN = 0.1
RICHARDSON_TOL = 0.1
NOISE_FLOOR = 1e-6
ROUNDOFF = 1e-12
ALIAS_TOL = 1e-20
DISK_FRACTION = 0.45
SCAN_STEPS = 512
BISECTIONS = 60
LEMMA_FRACTION = 0.25
ETA_GRID = np.geomspace(1e2, 1e4, 21)
HOMOGENEITY_RHOS = (2.0, 4.0, 8.0)


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True, eq=False)
class EndomorphismField:
    """y ↦ a(y), an r×r trigonometric-polynomial matrix field."""

    matrix: TrigPoly
    label: str = ""

    def __post_init__(self):
        shape = self.matrix.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError(f"endomorphism field needs square values, got {shape}")

    @classmethod
    def constant(cls, matrix, label: str = "") -> "EndomorphismField":
        return cls(TrigPoly.constant(np.atleast_2d(np.asarray(matrix, dtype=complex))), label)

    @classmethod
    def diagonal(cls, values: Sequence, label: str = "") -> "EndomorphismField":
        return cls.constant(np.diag(np.asarray(values, dtype=complex)), label)

    @classmethod
    def from_entries(cls, entries, label: str = "") -> "EndomorphismField":
        return cls(TrigPoly.matrix(entries), label)

    @classmethod
    def from_samples(cls, samples: np.ndarray, label: str = "") -> "EndomorphismField":
        """Interpolate samples on y_j = 2πj/N, shape (N, r, r)."""
        return cls(TrigPoly.from_samples(samples).trimmed(), label)

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, y: float) -> np.ndarray:
        return np.asarray(self.matrix(float(y)), dtype=complex)

    def shifted(self, s: float) -> "EndomorphismField":
        """a + sI."""
        return EndomorphismField(self.matrix + s * np.eye(self.rank), self.label)


@dataclass(frozen=True, eq=False)
class BracketMetric:
    """Scalar metric g(y) > 0 on Y; ⟨η⟩_y = (1 + g(y)η²)^{1/2}."""

    g: TrigPoly

    def __post_init__(self):
        if self.g.shape != ():
            raise ValueError("metric must be scalar on a one-dimensional Y")
        samples = self.g.sample(1024)
        if np.max(np.abs(samples.imag)) > 1e-12 or np.min(samples.real) <= 0.0:
            raise ValueError("metric must be real and positive on Y")

    @classmethod
    def euclidean(cls) -> "BracketMetric":
        return cls(TrigPoly.constant(1.0))

    def value(self, y) -> np.ndarray:
        return np.real(self.g(y))

    def bracket(self, y, eta) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        return np.sqrt(1.0 + self.value(y) * eta ** 2)

    def length(self, y, eta) -> np.ndarray:
        """|η|_g = g(y)^{1/2}|η|."""
        return np.sqrt(self.value(y)) * np.abs(np.asarray(eta, dtype=float))


@dataclass
class AdmissibleDecomposition:
    """Disks D_ℓ = D(σ_ℓ, ρ_ℓ) around eigenvalue clusters of a(y₀), valid on U."""

    field: EndomorphismField
    base_point: float
    delta: float
    centers: Tuple[complex, ...]
    radii: Tuple[float, ...]
    ranks: Tuple[int, ...]
    lower: float
    upper: float
    nodes: int = DEFAULT_NODES

    @property
    def interval(self) -> Tuple[float, float]:
        return self.base_point + self.lower, self.base_point + self.upper

    @property
    def full_circle(self) -> bool:
        return self.upper - self.lower >= 2.0 * np.pi

    def contains(self, y: float) -> bool:
        if self.full_circle:
            return True
        d = (float(y) - self.base_point + np.pi) % (2.0 * np.pi) - np.pi
        return self.lower < d < self.upper

    def contours(self) -> List[Contour]:
        return [Contour.circle(c, r, self.nodes) for c, r in zip(self.centers, self.radii)]

    def projections(self, y: float) -> List[np.ndarray]:
        """Π_ℓ(y) = (1/2πi)∮_{∂D_ℓ} (σ - a(y))^{-1} dσ."""
        if not self.contains(y):
            raise ValueError(f"y={y:.6f} lies outside the validity interval {self.interval}")
        a = self.field(y)
        out = []
        for contour in self.contours():
            z, w = contour.nodes_and_weights()
            out.append(np.einsum("n,nab->ab", w, resolvents(a, z)))
        return out

    def range_bases(self) -> List[np.ndarray]:
        """Orthonormal bases B_ℓ of ran Π_ℓ(y₀)."""
        bases = []
        for P, k in zip(self.projections(self.base_point), self.ranks):
            U, _, _ = np.linalg.svd(P)
            bases.append(U[:, :k])
        return bases

    def adapted_frame(self, y: float, bases: Optional[List[np.ndarray]] = None) -> np.ndarray:
        """T(y) = [Π_ℓ(y)B_ℓ]; T^{-1}aT is block diagonal."""
        bases = self.range_bases() if bases is None else bases
        return np.hstack([P @ B for P, B in zip(self.projections(y), bases)])

    def sample_points(self, count: int, fraction: float = LEMMA_FRACTION) -> np.ndarray:
        """Uniform points on the central `fraction` of U."""
        if self.full_circle:
            return self.base_point + 2.0 * np.pi * np.arange(count) / count
        mid = self.base_point + 0.5 * (self.lower + self.upper)
        half = 0.5 * fraction * (self.upper - self.lower)
        return np.linspace(mid - half, mid + half, count)


# =============================================================================
# MATRIX POWERS
# =============================================================================

def resolvents(a: np.ndarray, z: np.ndarray) -> np.ndarray:
    """(z_k - a)^{-1} for every node, shape (N, r, r)."""
    r = a.shape[0]
    eye = np.eye(r, dtype=complex)
    return np.linalg.solve(z[:, None, None] * eye - a[None], np.broadcast_to(eye, (z.size, r, r)))


def power_contour(a: np.ndarray, nodes: int = DEFAULT_NODES) -> Contour:
    """Circle about the spectral mean with radius s + max(1, s), s the spectral spread."""
    eigs = np.linalg.eigvals(np.atleast_2d(a))
    center = complex(np.mean(eigs))
    spread = float(np.max(np.abs(eigs - center)))
    return Contour.circle(center, spread + max(1.0, spread), nodes)


def _check_clearance(a: np.ndarray, contour: Contour) -> None:
    spacing = contour.node_spacing()
    for lam in np.linalg.eigvals(a):
        if not contour.contains(lam):
            raise ValueError(f"eigenvalue {lam:.6g} lies outside the contour")
        gap = contour.distance_to(lam)
        if gap < 2.0 * spacing:
            raise ContourTooTight(
                f"eigenvalue {lam:.6g} within {gap:.3e} of the contour (node spacing {spacing:.3e})",
                {"eigenvalue": str(lam), "gap": gap, "spacing": spacing},
            )


def matrix_power_batch(
    a: np.ndarray,
    rhos: Sequence[float],
    contour: Optional[Contour] = None,
    nodes: int = DEFAULT_NODES,
) -> np.ndarray:
    """ϱ^a for every ϱ in rhos, sharing one set of resolvents; shape (K, r, r).

    The integrand is written ϱ^c ϱ^{σ-c} around the contour center c.
    """
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    rhos = np.asarray(rhos, dtype=float).ravel()
    if np.any(rhos <= 0.0):
        raise ValueError("matrix powers need ϱ > 0")
    contour = contour or power_contour(a, nodes)
    _check_clearance(a, contour)
    z, w = contour.nodes_and_weights()
    R = resolvents(a, z)
    logs = np.log(rhos)
    phase = np.exp(np.outer(logs, z - contour.center)) * w[None, :]
    return np.einsum("kn,nab->kab", phase, R) * np.exp(logs * contour.center)[:, None, None]


def matrix_power(a: np.ndarray, rho: float, contour: Optional[Contour] = None,
                 nodes: int = DEFAULT_NODES) -> np.ndarray:
    """ϱ^a by the resolvent integral (i/2π)∮ ϱ^σ (a - σ)^{-1} dσ.

    Raises:
        ContourTooTight: an eigenvalue is within two node spacings of the contour.
    """
    return matrix_power_batch(a, [rho], contour, nodes)[0]


def bracket_power_symbol(field: EndomorphismField, metric: BracketMetric, y: float, eta: float,
                         s: float = 0.0, nodes: int = DEFAULT_NODES) -> np.ndarray:
    """⟨η⟩_y^{a(y)+s}."""
    a = field(y) + s * np.eye(field.rank)
    return matrix_power(a, float(metric.bracket(y, eta)), nodes=nodes)


# =============================================================================
# ADMISSIBLE DECOMPOSITIONS
# =============================================================================

def _disks(eigs: np.ndarray, delta: float) -> Tuple[List[complex], List[float], List[int]]:
    groups = cluster_points(list(eigs), delta / 2.0)
    centers = [complex(np.mean(eigs[g])) for g in groups]
    radii, ranks = [], []
    for i, (g, c) in enumerate(zip(groups, centers)):
        others = [abs(c - d) for j, d in enumerate(centers) if j != i]
        radius = min(DISK_FRACTION * delta, DISK_FRACTION * min(others)) if others else DISK_FRACTION * delta
        spread = float(np.max(np.abs(eigs[g] - c)))
        if spread >= radius / 1.05:
            raise ClusteringImpossible(
                f"cluster at {c:.6g} has spread {spread:.3e}, disk radius {radius:.3e}",
                {"center": str(c), "spread": spread, "radius": radius, "delta": delta},
            )
        radii.append(radius)
        ranks.append(len(g))
    return centers, radii, ranks


def _contained(field: EndomorphismField, y: float, centers, radii, ranks) -> bool:
    eigs = np.linalg.eigvals(field(y))
    counts = [int(np.sum(np.abs(eigs - c) < r)) for c, r in zip(centers, radii)]
    return counts == list(ranks)


def _scan(field, y0, direction, limit, centers, radii, ranks) -> Optional[float]:
    """Offset where containment first fails along one direction, or None."""
    step = 2.0 * np.pi / SCAN_STEPS
    k = 1
    while k * step <= limit:
        if not _contained(field, y0 + direction * k * step, centers, radii, ranks):
            good, bad = (k - 1) * step, k * step
            for _ in range(BISECTIONS):
                mid = 0.5 * (good + bad)
                if _contained(field, y0 + direction * mid, centers, radii, ranks):
                    good = mid
                else:
                    bad = mid
            return good
        k += 1
    return None


def admissible_decomposition(field: EndomorphismField, y0: float, delta: float = DELTA,
                             nodes: int = DEFAULT_NODES) -> AdmissibleDecomposition:
    """δ-admissible decomposition of a around y₀.

    Clusters the eigenvalues of a(y₀) by single linkage at δ/2 into disks of radius
    min(0.45δ, 0.45·distance to the nearest other center), then grows U from
    y₀ until some eigenvalue leaves its disk.

    Raises:
        ClusteringImpossible: a cluster does not fit inside its disk.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    eigs = np.linalg.eigvals(field(y0))
    centers, radii, ranks = _disks(eigs, delta)
    upper = _scan(field, y0, +1.0, np.pi, centers, radii, ranks)
    lower = _scan(field, y0, -1.0, np.pi, centers, radii, ranks)
    if upper is None and lower is not None:
        upper = _scan(field, y0, +1.0, 2.0 * np.pi - lower, centers, radii, ranks)
        upper = 2.0 * np.pi - lower if upper is None else upper
    elif lower is None and upper is not None:
        lower = _scan(field, y0, -1.0, 2.0 * np.pi - upper, centers, radii, ranks)
        lower = 2.0 * np.pi - upper if lower is None else lower
    elif upper is None:
        upper = lower = np.pi
    decomposition = AdmissibleDecomposition(
        field, float(y0), float(delta), tuple(centers), tuple(radii), tuple(ranks),
        -float(lower), float(upper), nodes,
    )
    logger.info(f"Admissible decomposition at y0={y0:.4f}: {len(centers)} disks, U={decomposition.interval}")
    return decomposition


# =============================================================================
# SYMBOL ESTIMATES
# =============================================================================

def bracket_eta_derivative(sigma: np.ndarray, g: float, eta: float, order: int) -> np.ndarray:
    """∂_η^order (1 + gη²)^{σ/2} for an array of exponents σ.

    Kept as Σ_j q_j(η)·u^{σ/2 - j}, u = 1 + gη²; one derivative maps q_j to
    q_j' at the same j and to (σ/2 - j)·2gη·q_j at j + 1.
    """
    sigma = np.asarray(sigma, dtype=complex).ravel()
    half = sigma / 2.0
    size = order + 1
    Q = np.zeros((size, sigma.size, size), dtype=complex)
    Q[0, :, 0] = 1.0
    for _ in range(order):
        nxt = np.zeros_like(Q)
        nxt[:, :, :-1] += Q[:, :, 1:] * np.arange(1, size)
        for j in range(size - 1):
            nxt[j + 1, :, 1:] += Q[j, :, :-1] * (2.0 * g) * (half - j)[:, None]
        Q = nxt
    u = 1.0 + g * eta ** 2
    powers = eta ** np.arange(size)
    return sum((Q[j] @ powers) * u ** (half - j) for j in range(size))


@dataclass
class EstimateRow:
    base_point: float
    alpha: int
    beta: int
    fitted_slope: float
    bound: float
    constant: float
    passed: bool


class _SymbolSampler:
    """⟨η⟩_y^{a(y)} and its η-derivatives on fixed contours (adapted or global frame)."""

    def __init__(self, field: EndomorphismField, metric: BracketMetric,
                 decomposition: AdmissibleDecomposition, adapted: bool, nodes: int):
        self.field = field
        self.metric = metric
        self.decomposition = decomposition
        self.adapted = adapted
        if adapted:
            self.bases = decomposition.range_bases()
            self.contours = decomposition.contours()
        else:
            self.bases = None
            self.contours = [power_contour(field(decomposition.base_point), nodes)]

    def _blocks(self, y: float) -> List[np.ndarray]:
        a = self.field(y)
        if not self.adapted:
            return [a]
        T = self.decomposition.adapted_frame(y, self.bases)
        local = np.linalg.solve(T, a @ T)
        blocks, start = [], 0
        for k in self.decomposition.ranks:
            blocks.append(local[start:start + k, start:start + k])
            start += k
        return blocks

    def evaluate(self, y: float, eta: float, beta: int, sign: float = 1.0) -> np.ndarray:
        """∂_η^β ⟨η⟩^{sign·a} in the chosen frame (block diagonal when adapted)."""
        g = float(self.metric.value(y))
        blocks = []
        for a_l, contour in zip(self._blocks(y), self.contours):
            z, w = contour.nodes_and_weights()
            weights = w * bracket_eta_derivative(sign * z, g, eta, beta)
            blocks.append(np.einsum("n,nab->ab", weights, resolvents(a_l, z)))
        return _block_diag(blocks)


def _block_diag(blocks: List[np.ndarray]) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    start = 0
    for b in blocks:
        k = b.shape[0]
        out[start:start + k, start:start + k] = b
        start += k
    return out


def _central_difference(f: Callable[[float], np.ndarray], y: float, order: int, h: float) -> np.ndarray:
    """Σ_j (-1)^j C(order, j) f(y + (order/2 - j)h) / h^order."""
    return sum((-1) ** j * math.comb(order, j) * f(y + (order / 2.0 - j) * h)
               for j in range(order + 1)) / h ** order


def _y_derivative(f, y: float, order: int, h: float) -> np.ndarray:
    """Central difference with one Richardson level.

    Raises:
        FiniteDifferenceInstability: the Richardson correction exceeds 10% of the value.
    """
    if order == 0:
        return f(y)
    coarse = _central_difference(f, y, order, h)
    fine = _central_difference(f, y, order, h / 2.0)
    value = (4.0 * fine - coarse) / 3.0
    size = float(np.linalg.norm(value, 2))
    # round-off level of the fine stencil
    if size < ROUNDOFF * float(np.linalg.norm(f(y), 2)) / (h / 2.0) ** order:
        return np.zeros_like(value)
    if float(np.linalg.norm(value - fine, 2)) > RICHARDSON_TOL * size:
        raise FiniteDifferenceInstability(
            f"Richardson disagreement above {RICHARDSON_TOL:.0%} at y={y:.6f}",
            {"y": y, "order": order, "step": h},
        )
    return value


def _fit(log_bracket: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """Least-squares line through (log⟨η⟩, log value) above the noise floor."""
    keep = values >= NOISE_FLOOR
    if np.count_nonzero(keep) < 3:
        return -np.inf, 0.0
    slope, intercept = np.polyfit(log_bracket[keep], np.log(values[keep]), 1)
    return float(slope), float(np.exp(intercept))


def symbol_estimate_check(
    field: EndomorphismField,
    metric: Optional[BracketMetric] = None,
    delta: float = DELTA,
    alpha_max: int = 2,
    beta_max: int = 2,
    base_points: Sequence[float] = (0.0, np.pi / 2.0),
    eta_grid: Sequence[float] = ETA_GRID,
    samples: int = 5,
    fd_step: float = FD_STEP,
    adapted: bool = True,
    nodes: int = DEFAULT_NODES,
    mapper: Optional[Callable] = None,
) -> List[EstimateRow]:
    """Fit ‖(∂_y^α ∂_η^β ⟨η⟩^a)⟨η⟩^{-a}‖ ~ C⟨η⟩^slope on each admissible interval.

    The bound is -β + δα for α > 0 and -β for α = 0; a row passes when the
    largest slope over the sample points stays within bound + 0.1. Series
    entirely below the noise floor count as slope -inf.
    """
    metric = metric or BracketMetric.euclidean()
    mapper = mapper or map
    eta_grid = np.asarray(eta_grid, dtype=float)
    rows: List[EstimateRow] = []
    for y0 in base_points:
        decomposition = admissible_decomposition(field, y0, delta, nodes)
        sampler = _SymbolSampler(field, metric, decomposition, adapted, nodes)
        points = decomposition.sample_points(samples)
        orders = [(alpha, beta) for alpha in range(alpha_max + 1) for beta in range(beta_max + 1)]

        def fit_at(item):
            (alpha, beta), y = item
            values = []
            for eta in eta_grid:
                D = _y_derivative(lambda t: sampler.evaluate(t, eta, beta), y, alpha, fd_step)
                inverse = sampler.evaluate(y, eta, 0, sign=-1.0)
                values.append(float(np.linalg.norm(D @ inverse, 2)))
            return _fit(np.log(metric.bracket(y, eta_grid)), np.asarray(values))

        items = [(order, y) for order in orders for y in points]
        fits = list(mapper(fit_at, items))
        for k, (alpha, beta) in enumerate(orders):
            chunk = fits[k * len(points):(k + 1) * len(points)]
            slope, constant = max(chunk, key=lambda f: f[0])
            bound = -beta + (delta * alpha if alpha > 0 else 0.0)
            rows.append(EstimateRow(float(y0), alpha, beta, slope, bound, constant,
                                    bool(slope <= bound + SLOPE_MARGIN)))
        logger.info(f"Symbol estimates at y0={y0:.4f}: {sum(r.passed for r in rows[-len(orders):])}/{len(orders)} passed")
    return rows


# =============================================================================
# NORMS
# =============================================================================

def varorder_norm(
    u: np.ndarray,
    field: EndomorphismField,
    metric: Optional[BracketMetric] = None,
    s: float = 0.0,
    nodes: int = DEFAULT_NODES,
    mapper: Optional[Callable] = None,
) -> float:
    """‖Λ^{a+s}u‖ on the N-point torus grid y_j = 2πj/N.

    (Λu)(y_j) = Σ_η e^{iy_jη} ⟨η⟩_{y_j}^{a(y_j)+s} û(η), û = FFT/N, and
    ‖v‖² = (1/N)Σ_j |v(y_j)|².

    Raises:
        AliasingError: u carries energy at |η| > N/4.
    """
    metric = metric or BracketMetric.euclidean()
    mapper = mapper or map
    u = np.asarray(u, dtype=complex)
    if u.ndim == 1:
        u = u[:, None]
    n = u.shape[0]
    if n < 2 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two, got {n}")
    if u.shape[1] != field.rank:
        raise ValueError(f"section has {u.shape[1]} components, field rank is {field.rank}")
    uhat = np.fft.fft(u, axis=0) / n
    eta = np.fft.fftfreq(n, d=1.0 / n)
    energy = np.sum(np.abs(uhat) ** 2, axis=1)
    top = float(np.sum(energy[np.abs(eta) > n / 4]))
    if top > ALIAS_TOL * float(np.sum(energy)):
        raise AliasingError(f"energy {top:.3e} above |η| = N/4", {"grid": n, "energy": top})
    y_grid = 2.0 * np.pi * np.arange(n) / n
    eye = np.eye(field.rank)

    def apply_at(j: int) -> np.ndarray:
        y = y_grid[j]
        P = matrix_power_batch(field(y) + s * eye, metric.bracket(y, eta), nodes=nodes)
        return np.einsum("k,kab,kb->a", np.exp(1j * y * eta), P, uhat)

    Lu = np.array(list(mapper(apply_at, range(n))))
    return float(np.sqrt(np.sum(np.abs(Lu) ** 2) / n))


def trace_sobolev_norm(
    section: np.ndarray,
    frame: TraceFrame,
    s: float,
    metric: Optional[BracketMetric] = None,
    nodes: int = DEFAULT_NODES,
    mapper: Optional[Callable] = None,
) -> float:
    """H^{s - x∂_x} norm of a section given by frame coefficients, shape (N, rank).

    The order field is sI - X(y), X(y) the matrix of x∂_x in the frame at y.
    """
    n = len(frame.y_grid)
    expected = 2.0 * np.pi * np.arange(n) / n
    if not np.allclose(np.asarray(frame.y_grid), expected, atol=1e-12):
        raise ValueError("trace-Sobolev norms need a frame on the uniform grid y_j = 2πj/N")
    X = np.stack([xdx_endomorphism(elements) for elements in frame.elements])
    field = EndomorphismField.from_samples(s * np.eye(frame.rank)[None] - X, label="s - x∂_x")
    return varorder_norm(section, field, metric, 0.0, nodes, mapper)


def trace_h1_norm(section: np.ndarray, frame: TraceFrame, metric: Optional[BracketMetric] = None,
                  nodes: int = DEFAULT_NODES, mapper: Optional[Callable] = None) -> float:
    """Boundary part ‖γ_A u‖_{H^{1/2 - x∂_x}} of the H¹_𝒯 norm."""
    return trace_sobolev_norm(section, frame, 0.5, metric, nodes, mapper)


# =============================================================================
# TWISTED HOMOGENEITY
# =============================================================================

def homogeneous_power_symbol(field: EndomorphismField, metric: Optional[BracketMetric] = None,
                             nodes: int = DEFAULT_NODES) -> Callable[[float, float], np.ndarray]:
    """(y, η) ↦ |η|_g^{a(y)}, η ≠ 0."""
    metric = metric or BracketMetric.euclidean()

    def symbol(y: float, eta: float) -> np.ndarray:
        return matrix_power(field(y), float(metric.length(y, eta)), nodes=nodes)

    return symbol


def bracket_symbol(field: EndomorphismField, metric: Optional[BracketMetric] = None,
                   nodes: int = DEFAULT_NODES) -> Callable[[float, float], np.ndarray]:
    """(y, η) ↦ ⟨η⟩_y^{a(y)}."""
    metric = metric or BracketMetric.euclidean()
    return lambda y, eta: bracket_power_symbol(field, metric, y, eta, 0.0, nodes)


@dataclass
class HomogeneityReport:
    max_defect: float
    etas: np.ndarray
    defects: np.ndarray


def twisted_homogeneity_check(
    symbol: Callable[[float, float], np.ndarray],
    field_a: EndomorphismField,
    field_b: EndomorphismField,
    mu: float,
    y_samples: Optional[Sequence[float]] = None,
    rhos: Sequence[float] = HOMOGENEITY_RHOS,
    etas: Optional[Sequence[float]] = None,
    nodes: int = DEFAULT_NODES,
) -> HomogeneityReport:
    """max ‖p(y,ϱη) - ϱ^μ ϱ^{-b(y)} p(y,η) ϱ^{a(y)}‖ / ‖p(y,ϱη)‖ over ϱ and |η| ≥ 1.

    ``defects`` holds the maximum per |η|, so the decay of a symbol that is
    homogeneous only modulo lower order can be read off.
    """
    y_samples = 2.0 * np.pi * np.arange(8) / 8 if y_samples is None else np.asarray(y_samples, dtype=float)
    etas = np.geomspace(1.0, 64.0 / max(rhos), 7) if etas is None else np.asarray(etas, dtype=float)
    if np.any(np.abs(etas) < 1.0):
        raise ValueError("homogeneity is tested for |η| ≥ 1")
    defects = np.zeros(etas.size)
    for y in y_samples:
        powers_a = matrix_power_batch(field_a(y), rhos, nodes=nodes)
        powers_b = matrix_power_batch(-field_b(y), rhos, nodes=nodes)
        for i, eta in enumerate(etas):
            for sign in (1.0, -1.0):
                base = np.atleast_2d(symbol(y, sign * eta))
                for rho, Pa, Pb in zip(rhos, powers_a, powers_b):
                    scaled = np.atleast_2d(symbol(y, sign * rho * eta))
                    model = rho ** mu * Pb @ base @ Pa
                    size = max(float(np.linalg.norm(scaled, 2)), 1e-300)
                    defects[i] = max(defects[i], float(np.linalg.norm(scaled - model, 2)) / size)
    return HomogeneityReport(float(np.max(defects)), etas, defects)

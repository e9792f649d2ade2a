# =============================================================================
# CORE TYPES, CONTOURS AND QUADRATURE
# =============================================================================
"""
Shared domain types: strips, contours, log grids, trigonometric polynomials on
the parameter circle Y = R/2πZ, matrix polynomial families, and the contour
quadrature every other module integrates with.

Convention: D = -i∂, so the indicial family is the substitution xD_x -> σ.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import legendre
from scipy.cluster.hierarchy import fcluster, linkage

from .config import ContourConfig, ContourKind
from .errors import NodeOnSingularity

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10
DEFAULT_NODES = 256
MIN_NODES = 16

Number = Union[int, float, complex]


# =============================================================================
# STRIP
# =============================================================================

@dataclass(frozen=True)
class Strip:
    """Horizontal strip Σ = {γ - m < Im σ < γ}."""

    gamma: float
    order: int

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"strip order must be a positive integer, got {self.order}")

    @property
    def lower(self) -> float:
        return self.gamma - self.order

    @property
    def height(self) -> float:
        return float(self.order)

    @property
    def midline(self) -> float:
        return self.gamma - self.order / 2.0

    def contains(self, sigma: complex, margin: float = 0.0) -> bool:
        """True when sigma lies strictly inside, at least ``margin`` from both lines."""
        im = complex(sigma).imag
        return self.lower + margin < im < self.gamma - margin

    def boundary_distance(self, sigma: complex) -> float:
        im = complex(sigma).imag
        return min(abs(im - self.gamma), abs(im - self.lower))

    def inscribed_circle(self, fraction: float = 0.95, nodes: int = DEFAULT_NODES) -> "Contour":
        """Circle centred on the midline with radius fraction * m/2."""
        return Contour.circle(1j * self.midline, fraction * self.order / 2.0, nodes)


# =============================================================================
# CONTOUR
# =============================================================================

@dataclass(frozen=True)
class Contour:
    """Closed, positively oriented contour with its quadrature node count.

    Circles and ellipses use the trapezoidal rule in the angle; rectangles use
    Gauss-Legendre on each side (nodes // 4 per side).
    """

    kind: ContourKind
    center: complex
    radius: float
    radius_imag: Optional[float] = None
    half_width: Optional[float] = None
    half_height: Optional[float] = None
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.nodes < MIN_NODES:
            raise ValueError(f"contour needs at least {MIN_NODES} nodes, got {self.nodes}")
        if self.radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.kind == ContourKind.ELLIPSE and (self.radius_imag is None or self.radius_imag <= 0):
            raise ValueError("ellipse needs a positive radius_imag")
        if self.kind == ContourKind.RECTANGLE and (
            self.half_width is None or self.half_height is None
            or self.half_width <= 0 or self.half_height <= 0
        ):
            raise ValueError("rectangle needs positive half_width and half_height")

    # -------------------------------------------------------------------------
    # Constructors
    # -------------------------------------------------------------------------
    @classmethod
    def circle(cls, center: complex, radius: float, nodes: int = DEFAULT_NODES) -> "Contour":
        return cls(ContourKind.CIRCLE, complex(center), float(radius), nodes=int(nodes))

    @classmethod
    def ellipse(cls, center: complex, radius_real: float, radius_imag: float,
                nodes: int = DEFAULT_NODES) -> "Contour":
        return cls(ContourKind.ELLIPSE, complex(center), float(radius_real),
                   radius_imag=float(radius_imag), nodes=int(nodes))

    @classmethod
    def rectangle(cls, center: complex, half_width: float, half_height: float,
                  nodes: int = DEFAULT_NODES) -> "Contour":
        return cls(ContourKind.RECTANGLE, complex(center), float(max(half_width, half_height)),
                   half_width=float(half_width), half_height=float(half_height), nodes=int(nodes))

    @classmethod
    def from_config(cls, cfg: ContourConfig, strip: Optional[Strip] = None) -> "Contour":
        """Contour described by the config; an unset radius means the strip's inscribed circle."""
        kind = ContourKind(cfg.kind)
        if kind == ContourKind.RECTANGLE:
            return cls.rectangle(cfg.center_complex, cfg.half_width or 0.0, cfg.half_height or 0.0, cfg.nodes)
        if cfg.radius is None:
            if strip is None:
                raise ValueError("contour radius unset and no strip to inscribe in")
            return strip.inscribed_circle(nodes=cfg.nodes)
        return cls(
            kind=kind,
            center=cfg.center_complex,
            radius=cfg.radius,
            radius_imag=cfg.radius_imag,
            half_width=cfg.half_width,
            half_height=cfg.half_height,
            nodes=cfg.nodes,
        )

    def with_nodes(self, nodes: int) -> "Contour":
        return Contour(self.kind, self.center, self.radius, self.radius_imag,
                       self.half_width, self.half_height, int(nodes))

    # -------------------------------------------------------------------------
    # Geometry
    # -------------------------------------------------------------------------
    def nodes_and_weights(self) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes z_j and weights w_j with (1/2πi)∮ f dσ ≈ Σ_j w_j f(z_j)."""
        n = self.nodes
        if self.kind == ContourKind.CIRCLE:
            theta = 2.0 * np.pi * np.arange(n) / n
            offset = self.radius * np.exp(1j * theta)
            return self.center + offset, offset / n
        if self.kind == ContourKind.ELLIPSE:
            theta = 2.0 * np.pi * np.arange(n) / n
            a, b = self.radius, self.radius_imag
            z = self.center + a * np.cos(theta) + 1j * b * np.sin(theta)
            dz = -a * np.sin(theta) + 1j * b * np.cos(theta)
            return z, dz / (1j * n)
        per_side = max(n // 4, 4)
        s, gw = legendre.leggauss(per_side)
        w_, h_ = self.half_width, self.half_height
        c = self.center
        corners = [c + complex(-w_, -h_), c + complex(w_, -h_), c + complex(w_, h_), c + complex(-w_, h_)]
        zs, ws = [], []
        for k in range(4):
            p, q = corners[k], corners[(k + 1) % 4]
            zs.append(p + (q - p) * (s + 1.0) / 2.0)
            ws.append(gw * (q - p) / 2.0 / (2j * np.pi))
        return np.concatenate(zs), np.concatenate(ws)

    def contains(self, z: complex) -> bool:
        d = complex(z) - self.center
        if self.kind == ContourKind.CIRCLE:
            return abs(d) < self.radius
        if self.kind == ContourKind.ELLIPSE:
            return (d.real / self.radius) ** 2 + (d.imag / self.radius_imag) ** 2 < 1.0
        return abs(d.real) < self.half_width and abs(d.imag) < self.half_height

    def distance_to(self, z: complex) -> float:
        """Distance from z to the curve itself."""
        d = complex(z) - self.center
        if self.kind == ContourKind.CIRCLE:
            return abs(abs(d) - self.radius)
        if self.kind == ContourKind.RECTANGLE:
            dx, dy = abs(d.real), abs(d.imag)
            w_, h_ = self.half_width, self.half_height
            if dx <= w_ and dy <= h_:
                return min(w_ - dx, h_ - dy)
            return float(np.hypot(max(dx - w_, 0.0), max(dy - h_, 0.0)))
        theta = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
        curve = self.radius * np.cos(theta) + 1j * self.radius_imag * np.sin(theta)
        return float(np.min(np.abs(curve - d)))

    def node_spacing(self) -> float:
        z, _ = self.nodes_and_weights()
        return float(np.max(np.abs(np.diff(np.append(z, z[0])))))


# =============================================================================
# RADIAL QUADRATURE GRID
# =============================================================================

@dataclass(frozen=True, eq=False)
class LogGrid:
    """Gauss-Legendre rule in t = log x over [x0, x1]."""

    x0: float
    x1: float
    t: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_legendre(cls, x0: float, x1: float, n: int) -> "LogGrid":
        if x0 <= 0 or x1 <= x0:
            raise ValueError(f"log grid needs 0 < x0 < x1, got [{x0}, {x1}]")
        s, w = legendre.leggauss(int(n))
        a, b = np.log(x0), np.log(x1)
        t = 0.5 * (b - a) * s + 0.5 * (b + a)
        return cls(float(x0), float(x1), t, 0.5 * (b - a) * w)

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.t)

    @property
    def size(self) -> int:
        return int(self.t.size)

    def refined(self) -> "LogGrid":
        return LogGrid.gauss_legendre(self.x0, self.x1, 2 * self.size)

    def covers(self, a: float, b: float) -> bool:
        return self.x0 <= a and b <= self.x1


# =============================================================================
# TRIGONOMETRIC POLYNOMIALS ON Y
# =============================================================================

def _as_coeffs(value) -> np.ndarray:
    return np.asarray(value, dtype=complex)


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Array-valued trigonometric polynomial Σ_{|k|≤M} c_k e^{iky}.

    ``coeffs`` has shape (2M+1, *shape); row k+M holds c_k.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = _as_coeffs(self.coeffs)
        if c.ndim == 0 or c.shape[0] % 2 == 0:
            raise ValueError("TrigPoly needs an odd number of Fourier rows")
        object.__setattr__(self, "coeffs", c)

    # -------------------------------------------------------------------------
    # Constructors
    # -------------------------------------------------------------------------
    @classmethod
    def constant(cls, value) -> "TrigPoly":
        return cls(_as_coeffs(value)[None, ...])

    @classmethod
    def scalar(cls, a0: Number = 0.0, cos: Sequence[Number] = (), sin: Sequence[Number] = ()) -> "TrigPoly":
        """a0 + Σ_k cos[k-1] cos(ky) + sin[k-1] sin(ky)."""
        degree = max(len(cos), len(sin))
        c = np.zeros(2 * degree + 1, dtype=complex)
        c[degree] = a0
        for k in range(1, degree + 1):
            a = cos[k - 1] if k <= len(cos) else 0.0
            b = sin[k - 1] if k <= len(sin) else 0.0
            c[degree + k] += a / 2.0 + b / 2j
            c[degree - k] += a / 2.0 - b / 2j
        return cls(c)

    @classmethod
    def matrix(cls, entries: Sequence[Sequence[Union["TrigPoly", Number]]]) -> "TrigPoly":
        """Assemble a matrix-valued polynomial from scalar entries."""
        polys = [[e if isinstance(e, TrigPoly) else TrigPoly.constant(e) for e in row] for row in entries]
        degree = max(p.degree for row in polys for p in row)
        rows, cols = len(polys), len(polys[0])
        c = np.zeros((2 * degree + 1, rows, cols), dtype=complex)
        for i, row in enumerate(polys):
            if len(row) != cols:
                raise ValueError("ragged matrix entries")
            for j, p in enumerate(row):
                if p.shape != ():
                    raise ValueError("matrix entries must be scalar TrigPolys")
                c[:, i, j] = p.padded(degree).coeffs
        return cls(c)

    @classmethod
    def block_diag(cls, blocks: Sequence["TrigPoly"]) -> "TrigPoly":
        degree = max(b.degree for b in blocks)
        sizes = [b.shape for b in blocks]
        rows = sum(s[0] for s in sizes)
        cols = sum(s[1] for s in sizes)
        c = np.zeros((2 * degree + 1, rows, cols), dtype=complex)
        r0 = c0 = 0
        for b, (r, s) in zip(blocks, sizes):
            c[:, r0:r0 + r, c0:c0 + s] = b.padded(degree).coeffs
            r0, c0 = r0 + r, c0 + s
        return cls(c)

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "TrigPoly":
        """Trigonometric interpolant of samples on y_j = 2πj/N (Nyquist split evenly)."""
        samples = _as_coeffs(samples)
        n = samples.shape[0]
        spectrum = np.fft.fft(samples, axis=0) / n
        if n % 2:
            degree = (n - 1) // 2
            c = np.concatenate([spectrum[n - degree:], spectrum[:degree + 1]], axis=0)
        else:
            degree = n // 2
            c = np.zeros((2 * degree + 1,) + samples.shape[1:], dtype=complex)
            c[degree:2 * degree] = spectrum[:degree]
            c[1:degree] = spectrum[n - degree + 1:]
            c[0] = spectrum[degree] / 2.0
            c[2 * degree] = spectrum[degree] / 2.0
        return cls(c)

    # -------------------------------------------------------------------------
    # Structure
    # -------------------------------------------------------------------------
    @property
    def degree(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.coeffs.shape[1:])

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.degree, self.degree + 1)

    def padded(self, degree: int) -> "TrigPoly":
        if degree < self.degree:
            raise ValueError("cannot pad to a smaller degree")
        extra = degree - self.degree
        if extra == 0:
            return self
        pad = [(extra, extra)] + [(0, 0)] * len(self.shape)
        return TrigPoly(np.pad(self.coeffs, pad))

    def trimmed(self, tol: float = 1e-14) -> "TrigPoly":
        """Drop outer frequency pairs whose coefficients are below tol (relative)."""
        c = self.coeffs
        scale = max(float(np.max(np.abs(c))), 1e-300)
        degree = self.degree
        while degree > 0:
            lo, hi = self.degree - degree, self.degree + degree
            if np.max(np.abs(c[lo])) > tol * scale or np.max(np.abs(c[hi])) > tol * scale:
                break
            degree -= 1
        return TrigPoly(c[self.degree - degree:self.degree + degree + 1])

    def entry(self, i: int, j: int) -> "TrigPoly":
        return TrigPoly(self.coeffs[:, i, j])

    # -------------------------------------------------------------------------
    # Evaluation
    # -------------------------------------------------------------------------
    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        phase = np.exp(1j * np.multiply.outer(y, self.frequencies))
        return np.tensordot(phase, self.coeffs, axes=([-1], [0]))

    def derivative(self, order: int = 1) -> "TrigPoly":
        factor = (1j * self.frequencies) ** order
        return TrigPoly(self.coeffs * factor.reshape((-1,) + (1,) * len(self.shape)))

    def sample(self, n: int) -> np.ndarray:
        return self(2.0 * np.pi * np.arange(n) / n)

    # -------------------------------------------------------------------------
    # Algebra
    # -------------------------------------------------------------------------
    def __add__(self, other) -> "TrigPoly":
        other = other if isinstance(other, TrigPoly) else TrigPoly.constant(other)
        degree = max(self.degree, other.degree)
        return TrigPoly(self.padded(degree).coeffs + other.padded(degree).coeffs)

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(-self.coeffs)

    def __sub__(self, other) -> "TrigPoly":
        return self + (-other if isinstance(other, TrigPoly) else -_as_coeffs(other))

    def __rsub__(self, other) -> "TrigPoly":
        return (-self) + other

    def __mul__(self, other) -> "TrigPoly":
        """Pointwise product (scalars, arrays or polynomials; broadcasting)."""
        if not isinstance(other, TrigPoly):
            return TrigPoly(self.coeffs * _as_coeffs(other))
        c1, c2 = self.coeffs, other.coeffs
        shape = np.broadcast_shapes(self.shape, other.shape)
        out = np.zeros((c1.shape[0] + c2.shape[0] - 1,) + shape, dtype=complex)
        for i in range(c1.shape[0]):
            out[i:i + c2.shape[0]] += c1[i] * c2
        return TrigPoly(out)

    __rmul__ = __mul__

    def matmul(self, other: "TrigPoly") -> "TrigPoly":
        c1, c2 = self.coeffs, other.coeffs
        out = np.zeros((c1.shape[0] + c2.shape[0] - 1, self.shape[0], other.shape[1]), dtype=complex)
        for i in range(c1.shape[0]):
            out[i:i + c2.shape[0]] += np.einsum("ab,kbc->kac", c1[i], c2)
        return TrigPoly(out)

    def conj(self) -> "TrigPoly":
        """Pointwise complex conjugate of the values."""
        return TrigPoly(np.conj(self.coeffs[::-1]))

    def conj_transpose(self) -> "TrigPoly":
        """Pointwise Hermitian adjoint of matrix values."""
        return TrigPoly(np.conj(np.swapaxes(self.coeffs[::-1], -1, -2)))

    # -------------------------------------------------------------------------
    # Diagnostics
    # -------------------------------------------------------------------------
    def winding_number(self, samples: int = 2048) -> int:
        """Winding number of a scalar polynomial around 0 (samples the circle)."""
        values = self.sample(samples)
        increments = np.angle(np.roll(values, -1) / values)
        return int(np.rint(np.sum(increments) / (2.0 * np.pi)))

    def min_abs(self, samples: int = 2048) -> float:
        return float(np.min(np.abs(self.sample(samples))))


# =============================================================================
# MATRIX POLYNOMIAL FAMILY
# =============================================================================

@dataclass(frozen=True, eq=False)
class MatrixPolyFamily:
    """F(y, σ) = Σ_j C_j(y) σ^j with trig-polynomial coefficients C_j on Y."""

    coeffs: Tuple[TrigPoly, ...]
    label: str = ""

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise ValueError("family needs at least one coefficient")
        shape = coeffs[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError(f"family coefficients must be square matrices, got shape {shape}")
        if any(c.shape != shape for c in coeffs):
            raise ValueError("all family coefficients must share one shape")
        object.__setattr__(self, "coeffs", coeffs)

    # -------------------------------------------------------------------------
    # Constructors
    # -------------------------------------------------------------------------
    @classmethod
    def constant(cls, matrices: Sequence, label: str = "") -> "MatrixPolyFamily":
        mats = [np.atleast_2d(np.asarray(m, dtype=complex)) for m in matrices]
        return cls(tuple(TrigPoly.constant(m) for m in mats), label)

    @classmethod
    def scalar(cls, poly: Sequence[Number], label: str = "") -> "MatrixPolyFamily":
        """Scalar family from σ-coefficients, lowest power first."""
        return cls.constant([[[c]] for c in poly], label)

    @classmethod
    def from_factor(cls, leading: TrigPoly, poly: Sequence[Number], label: str = "") -> "MatrixPolyFamily":
        """Family a(y)·p(σ) for a matrix field a and scalar polynomial p."""
        return cls(tuple(leading * complex(c) for c in poly), label)

    @classmethod
    def from_grid(cls, samples: np.ndarray, label: str = "") -> "MatrixPolyFamily":
        """Family tabulated on a uniform y grid; samples shape (N, degree+1, r, r)."""
        samples = np.asarray(samples, dtype=complex)
        return cls(tuple(TrigPoly.from_samples(samples[:, j]) for j in range(samples.shape[1])), label)

    # -------------------------------------------------------------------------
    # Structure and evaluation
    # -------------------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficients(self, y: float) -> np.ndarray:
        """Array (degree+1, r, r) of C_j(y)."""
        return np.stack([c(y) for c in self.coeffs])

    def evaluate(self, y: float, sigma, coefficients: Optional[np.ndarray] = None) -> np.ndarray:
        """F(y, σ) for scalar σ (r×r) or an array of σ (..., r, r)."""
        C = self.coefficients(y) if coefficients is None else coefficients
        sigma = np.asarray(sigma, dtype=complex)
        out = np.zeros(sigma.shape + C.shape[1:], dtype=complex)
        for j in range(C.shape[0] - 1, -1, -1):
            out = out * sigma[..., None, None] + C[j]
        return out

    def derivative(self, y: float, sigma, order: int = 1) -> np.ndarray:
        """∂_σ^order F(y, σ)."""
        C = self.coefficients(y)
        d = C.shape[0] - 1
        if order > d:
            return np.zeros(np.shape(sigma) + C.shape[1:], dtype=complex)
        falling = np.array([np.prod(np.arange(j - order + 1, j + 1)) for j in range(order, d + 1)], dtype=float)
        shifted = C[order:] * falling[:, None, None]
        return self.evaluate(y, sigma, coefficients=shifted)

    def scale(self, y: float) -> float:
        """Largest spectral norm among the coefficients at y."""
        C = self.coefficients(y)
        return max(float(max(np.linalg.norm(Cj, 2) for Cj in C)), 1e-300)

    def is_zero(self, y: float) -> bool:
        return not np.any(self.coefficients(y))

    def sample_coefficients(self, y_grid: Iterable[float]) -> np.ndarray:
        return np.stack([self.coefficients(y) for y in y_grid])


# =============================================================================
# QUADRATURE AND SCANS
# =============================================================================

def trapezoid_contour_quadrature(
    contour: Contour,
    integrand: Callable[[complex], np.ndarray],
) -> np.ndarray:
    """Approximate (1/2πi)∮ integrand(σ) dσ with the contour's node rule.

    Args:
        contour: Closed positively oriented contour.
        integrand: Map from a complex node to a scalar or array.

    Returns:
        Weighted node sum, accumulated in node order.

    Raises:
        NodeOnSingularity: a node evaluation is not finite or hits a singular solve.
    """
    nodes, weights = contour.nodes_and_weights()
    total = None
    for z, w in zip(nodes, weights):
        try:
            with np.errstate(over="raise", divide="raise", invalid="raise"):
                value = np.asarray(integrand(z), dtype=complex)
        except (FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError) as e:
            raise NodeOnSingularity(f"integrand singular at node {z}: {e}", {"node": [z.real, z.imag]})
        if not np.all(np.isfinite(value)):
            raise NodeOnSingularity(f"integrand not finite at node {z}", {"node": [z.real, z.imag]})
        total = w * value if total is None else total + w * value
    return total


def min_singular_value_scan(F: MatrixPolyFamily, y: float, samples: Sequence[complex]) -> List[float]:
    """Smallest singular value of F(y, σ) at each sample σ."""
    if len(samples) == 0:
        raise ValueError("samples must be non-empty")
    values = F.evaluate(y, np.asarray(samples, dtype=complex))
    return [float(s[-1]) for s in np.linalg.svd(values, compute_uv=False)]


def assert_contour_admissible(
    F: MatrixPolyFamily,
    y: float,
    contour: Contour,
    rank_tol: float = RANK_TOL,
) -> float:
    """Reject contours passing (numerically) through the spectrum.

    Returns:
        The minimal sampled σ_min along the contour nodes.
    """
    nodes, _ = contour.nodes_and_weights()
    smin = min(min_singular_value_scan(F, y, nodes))
    threshold = rank_tol * F.scale(y)
    if smin < threshold:
        raise NodeOnSingularity(
            f"contour passes within {smin:.3e} of the spectrum (threshold {threshold:.3e})",
            {"y": y, "min_singular_value": smin},
        )
    return smin


def far_field_invertible(
    F: MatrixPolyFamily,
    y: float,
    strip: Strip,
    distance: float = 1e3,
    samples: int = 9,
    rank_tol: float = RANK_TOL,
) -> bool:
    """Sampled check that F(y, σ) is invertible for |Re σ| large inside the strip."""
    ims = np.linspace(strip.lower, strip.gamma, samples)
    sigmas = np.concatenate([distance + 1j * ims, -distance + 1j * ims])
    values = F.evaluate(y, sigmas)
    sv = np.linalg.svd(values, compute_uv=False)
    scale = np.max(sv[:, 0])
    return bool(np.all(sv[:, -1] > rank_tol * max(scale, 1e-300)))


def cluster_points(values: Sequence[complex], tol: float) -> List[List[int]]:
    """Single-linkage clusters of complex points at distance < tol.

    Clusters come back ordered by their first member, members sorted.
    """
    values = np.asarray(values, dtype=complex).ravel()
    n = values.size
    if n == 0:
        return []
    if n == 1 or tol <= 0.0:
        return [[i] for i in range(n)]
    points = np.column_stack([values.real, values.imag])
    # fcluster keeps merge heights <= t
    labels = fcluster(linkage(points, method="single"), np.nextafter(tol, 0.0), criterion="distance")
    groups = {}
    for i, label in enumerate(labels):
        groups.setdefault(int(label), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def sort_key(sigma: complex, decimals: int = 9) -> Tuple[float, float]:
    """Deterministic ordering: descending Im, then ascending Re."""
    sigma = complex(sigma)
    return (-round(sigma.imag, decimals), round(sigma.real, decimals))

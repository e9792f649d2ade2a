# =============================================================================
# WEDGE OPERATORS IN COORDINATES
# =============================================================================
"""
Coordinate representation of wedge operators

    x^m A = Σ_{k+α+β ≤ m} a_{kαβ}(x, y, z) (xD_x)^k (xD_y)^α D_z^β

with y on the edge circle and z on the fiber (a circle or a point), plus the
objects derived from it: the wedge principal symbol, a sampled ellipticity
check, the indicial family (after projection onto a truncated fiber basis),
the normal family and the κ-dilation acting on half-line operators.

Fiber truncation is mode-major: index = mode_position * rank + component.
"""

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from .core import MatrixPolyFamily, TrigPoly
from .errors import TruncationWarning

logger = logging.getLogger(__name__)

ELLIPTIC_TOL = 1e-8
LEAKAGE_TOL = 1e-14

MultiIndex = Tuple[int, int, int]


# =============================================================================
# COEFFICIENT TABLES
# =============================================================================

@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Matrix coefficient a(x, y, z) = Σ_p x^p Σ_{j,l} c_{p,j,l} e^{i(jy + lz)}.

    ``layers`` maps the x power p to an array of shape (2My+1, 2Mz+1, rows, cols).
    """

    layers: Dict[int, np.ndarray]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("coefficient table needs at least one x power")
        layers = {}
        shape = None
        for p, arr in self.layers.items():
            arr = np.asarray(arr, dtype=complex)
            if int(p) < 0:
                raise ValueError("x powers must be non-negative")
            if arr.ndim != 4 or arr.shape[0] % 2 == 0 or arr.shape[1] % 2 == 0:
                raise ValueError("each layer must have shape (2My+1, 2Mz+1, rows, cols)")
            if shape is not None and arr.shape[2:] != shape:
                raise ValueError("all layers must share one matrix shape")
            shape = arr.shape[2:]
            layers[int(p)] = arr
        object.__setattr__(self, "layers", layers)

    @classmethod
    def constant(cls, matrix) -> "CoefficientTable":
        m = np.atleast_2d(np.asarray(matrix, dtype=complex))
        return cls({0: m[None, None]})

    @classmethod
    def from_y(cls, poly: TrigPoly, x_power: int = 0) -> "CoefficientTable":
        """Coefficient depending on y only, taken from a matrix-valued TrigPoly."""
        c = poly.coeffs
        if c.ndim == 1:
            c = c[:, None, None]
        return cls({int(x_power): c[:, None]})

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[int, int, int, np.ndarray]]) -> "CoefficientTable":
        """Assemble from (x_power, y_freq, z_freq, matrix) entries."""
        terms = [(int(p), int(j), int(l), np.atleast_2d(np.asarray(m, dtype=complex))) for p, j, l, m in terms]
        if not terms:
            raise ValueError("no coefficient terms given")
        my = max(abs(j) for _, j, _, _ in terms)
        mz = max(abs(l) for _, _, l, _ in terms)
        shape = terms[0][3].shape
        layers: Dict[int, np.ndarray] = {}
        for p, j, l, m in terms:
            if m.shape != shape:
                raise ValueError("coefficient matrices must share one shape")
            layer = layers.setdefault(p, np.zeros((2 * my + 1, 2 * mz + 1) + shape, dtype=complex))
            layer[j + my, l + mz] += m
        return cls(layers)

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(next(iter(self.layers.values())).shape[2:])

    @property
    def z_degree(self) -> int:
        return max((arr.shape[1] - 1) // 2 for arr in self.layers.values())

    def __call__(self, x: float, y: float, z: float = 0.0) -> np.ndarray:
        out = np.zeros(self.shape, dtype=complex)
        for p, arr in self.layers.items():
            my, mz = (arr.shape[0] - 1) // 2, (arr.shape[1] - 1) // 2
            ey = np.exp(1j * np.arange(-my, my + 1) * y)
            ez = np.exp(1j * np.arange(-mz, mz + 1) * z)
            out += x ** p * np.einsum("j,l,jlab->ab", ey, ez, arr)
        return out

    def boundary_z_mode(self, y: float, l: int) -> np.ndarray:
        """Fourier coefficient in z of a(0, y, ·) at frequency l."""
        arr = self.layers.get(0)
        if arr is None:
            return np.zeros(self.shape, dtype=complex)
        my, mz = (arr.shape[0] - 1) // 2, (arr.shape[1] - 1) // 2
        if abs(l) > mz:
            return np.zeros(self.shape, dtype=complex)
        ey = np.exp(1j * np.arange(-my, my + 1) * y)
        return np.einsum("j,jab->ab", ey, arr[:, l + mz])

    def transformed(self, left: np.ndarray, right: np.ndarray) -> "CoefficientTable":
        return CoefficientTable({p: np.einsum("ab,jlbc,cd->jlad", left, arr, right) for p, arr in self.layers.items()})


# =============================================================================
# FIBER BASIS
# =============================================================================

class FiberKind(str, Enum):
    CIRCLE = "circle"
    POINT = "point"


@dataclass(frozen=True, eq=False)
class FiberBasis:
    """Truncated orthonormal eigenbasis of Q_Z = Δ_Z + c.

    On the circle the modes are ψ_n = e^{inz}/√(2π) ordered 0, 1, -1, 2, -2, ...
    so that λ_n² = n² + c is nondecreasing. A point fiber has one mode, λ² = c.
    """

    kind: FiberKind
    modes: Tuple[int, ...]
    c: float = 0.0

    @property
    def size(self) -> int:
        return len(self.modes)

    @property
    def eigenvalues(self) -> np.ndarray:
        """λ_k = (n_k² + c)^{1/2}."""
        n = np.asarray(self.modes, dtype=float)
        return np.sqrt(n ** 2 + self.c)

    def position(self, mode: int) -> Optional[int]:
        try:
            return self.modes.index(mode)
        except ValueError:
            return None

    def __call__(self, k: int, z: float) -> complex:
        if self.kind == FiberKind.POINT:
            return 1.0 + 0j
        return np.exp(1j * self.modes[k] * z) / np.sqrt(2.0 * np.pi)


def fiber_basis(kind: str = "circle", modes: int = 1, c: float = 0.0) -> FiberBasis:
    """Build a fiber basis with ``modes`` eigenfunctions of Δ_Z + c."""
    kind = FiberKind(kind)
    if modes < 1:
        raise ValueError("fiber basis needs at least one mode")
    if c < 0:
        raise ValueError("fiber constant c must be non-negative")
    if kind == FiberKind.POINT:
        if modes != 1:
            raise ValueError("a point fiber carries exactly one mode")
        return FiberBasis(kind, (0,), float(c))
    order = [0]
    n = 1
    while len(order) < modes:
        order.append(n)
        if len(order) < modes:
            order.append(-n)
        n += 1
    return FiberBasis(kind, tuple(order), float(c))


# =============================================================================
# OPERATOR SPEC
# =============================================================================

@dataclass(frozen=True, eq=False)
class WedgeOperatorSpec:
    """Coefficient table of x^m A in wedge coordinates (x, y, z).

    Multi-indices are (k, α, β): powers of xD_x, xD_y and D_z.
    """

    order: int
    rank_e: int
    rank_f: int
    coefficients: Dict[MultiIndex, CoefficientTable]
    gamma: float = 0.0
    fiber: FiberKind = FiberKind.CIRCLE
    label: str = ""

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("operator order must be positive")
        coeffs = {}
        for idx, table in self.coefficients.items():
            k, a, b = (int(v) for v in idx)
            if min(k, a, b) < 0 or k + a + b > self.order:
                raise ValueError(f"multi-index {idx} not allowed for order {self.order}")
            if table.shape != (self.rank_f, self.rank_e):
                raise ValueError(f"coefficient {idx} has shape {table.shape}, expected ({self.rank_f}, {self.rank_e})")
            if FiberKind(self.fiber) == FiberKind.POINT and (b > 0 or table.z_degree > 0):
                raise ValueError("a point fiber admits no z dependence")
            coeffs[(k, a, b)] = table
        object.__setattr__(self, "coefficients", dict(sorted(coeffs.items())))
        object.__setattr__(self, "fiber", FiberKind(self.fiber))

    def top_order_terms(self) -> List[Tuple[MultiIndex, CoefficientTable]]:
        return [(idx, t) for idx, t in self.coefficients.items() if sum(idx) == self.order]

    def conjugated(self, left: np.ndarray, right: np.ndarray) -> "WedgeOperatorSpec":
        """Spec of L ∘ A ∘ R for constant bundle maps (change of frame)."""
        left = np.asarray(left, dtype=complex)
        right = np.asarray(right, dtype=complex)
        return WedgeOperatorSpec(
            self.order, right.shape[1], left.shape[0],
            {idx: t.transformed(left, right) for idx, t in self.coefficients.items()},
            self.gamma, self.fiber, self.label,
        )


# =============================================================================
# PRINCIPAL SYMBOL AND ELLIPTICITY
# =============================================================================

def wedge_principal_symbol(
    spec: WedgeOperatorSpec,
    point: Sequence[float],
    covector: Sequence[float],
) -> np.ndarray:
    """Σ_{k+α+β=m} a_{kαβ}(x, y, z) ξ^k η^α ζ^β at one point.

    Args:
        spec: Operator coefficient table.
        point: (x, y, z); z is ignored for a point fiber.
        covector: (ξ, η, ζ), or (ξ, η) for a point fiber.
    """
    cov = list(covector) + [0.0] * (3 - len(covector))
    if not any(cov):
        raise ValueError("covector must be nonzero")
    x, y = point[0], point[1]
    z = point[2] if len(point) > 2 else 0.0
    xi, eta, zeta = cov
    out = np.zeros((spec.rank_f, spec.rank_e), dtype=complex)
    for (k, a, b), table in spec.top_order_terms():
        out += table(x, y, z) * (xi ** k) * (eta ** a) * (zeta ** b)
    return out


@dataclass
class EllipticityReport:
    min_singular_value: float
    worst_point: Tuple[float, ...]
    worst_covector: Tuple[float, ...]
    samples: int
    elliptic: bool


def _cosphere_directions(dim: int) -> np.ndarray:
    axes = np.eye(dim)
    dirs = [axes, -axes]
    for i in range(dim):
        for j in range(i + 1, dim):
            for s in (1.0, -1.0):
                d = np.zeros(dim)
                d[i], d[j] = 1.0, s
                dirs.append((d / np.sqrt(2.0))[None])
    return np.concatenate(dirs)


def ellipticity_sample_check(
    spec: WedgeOperatorSpec,
    samples: int,
    tol: float = ELLIPTIC_TOL,
    x_max: float = 1.0,
) -> EllipticityReport:
    """Minimum singular value of the principal symbol over sampled unit covectors.

    Points and covectors come from an unscrambled Halton sequence; at every
    point the axis covectors and their pairwise diagonals are added.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    cov_dim = 2 if spec.fiber == FiberKind.POINT else 3
    draws = qmc.Halton(d=3 + cov_dim, scramble=False).random(samples + 1)[1:]
    fixed = _cosphere_directions(cov_dim)
    best = (np.inf, (), ())
    for row in draws:
        point = (x_max * row[0], 2.0 * np.pi * row[1], 2.0 * np.pi * row[2])
        if cov_dim == 3:
            theta, phi = np.arccos(1.0 - 2.0 * row[3]), 2.0 * np.pi * row[4]
            sampled = np.array([np.cos(theta), np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)])
        else:
            sampled = np.array([np.cos(2.0 * np.pi * row[3]), np.sin(2.0 * np.pi * row[3])])
        for cov in np.vstack([sampled[None], fixed]):
            s = np.linalg.svd(wedge_principal_symbol(spec, point, cov), compute_uv=False)
            smin = float(s[-1]) if spec.rank_e <= spec.rank_f else 0.0
            if smin < best[0]:
                best = (smin, point, tuple(float(v) for v in cov))
    report = EllipticityReport(best[0], best[1], best[2], samples, best[0] > tol)
    logger.info(f"Ellipticity check ({spec.label or 'spec'}): min σ_min={report.min_singular_value:.3e}")
    return report


# =============================================================================
# HALF-LINE OPERATORS
# =============================================================================

@dataclass(frozen=True, eq=False)
class HalfLineTerm:
    """One term x^p q(xD_x) C; q is stored lowest power first."""

    x_power: int
    poly: Tuple[complex, ...]
    matrix: np.ndarray

    def key(self) -> Tuple[int, Tuple[complex, ...]]:
        return (self.x_power, self.poly)


@dataclass(frozen=True, eq=False)
class HalfLineOperator:
    """x^{-m} Σ_terms x^p q(xD_x) C acting on ℂ^r-valued functions on (0, ∞)."""

    dim: int
    order: int
    terms: Tuple[HalfLineTerm, ...]
    gamma: float = 0.0

    def same_terms(self, other: "HalfLineOperator", rtol: float = 0.0) -> bool:
        if self.dim != other.dim or self.order != other.order or len(self.terms) != len(other.terms):
            return False
        for a, b in zip(self.terms, other.terms):
            if a.key() != b.key():
                return False
            if rtol == 0.0:
                if not np.array_equal(a.matrix, b.matrix):
                    return False
            elif not np.allclose(a.matrix, b.matrix, rtol=rtol, atol=0.0):
                return False
        return True

    def boundary_matrix(self, sigma: complex) -> np.ndarray:
        """Σ over x-power-0 terms of q(σ) C."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self.terms:
            if t.x_power == 0:
                out += np.polynomial.polynomial.polyval(sigma, t.poly) * t.matrix
        return out


def _monomial(k: int) -> Tuple[complex, ...]:
    return tuple([0j] * k + [1 + 0j])


def _collect(terms: Dict[Tuple[int, int], np.ndarray], dim: int, order: int, gamma: float) -> HalfLineOperator:
    kept = [
        HalfLineTerm(p, _monomial(k), m)
        for (p, k), m in sorted(terms.items())
        if np.any(m)
    ]
    return HalfLineOperator(dim, order, tuple(kept), gamma)


def _require_square(spec: WedgeOperatorSpec) -> None:
    if spec.rank_e != spec.rank_f:
        raise ValueError("indicial reduction needs rank E == rank F")


def _fiber_projection(table: CoefficientTable, beta: int, basis: FiberBasis, y: float) -> np.ndarray:
    """Block matrix ⟨ψ_m, a(0, y, ·) D_z^β ψ_n⟩ = n^β a_{m-n}(y), mode-major."""
    r = table.shape[0]
    K = basis.size
    out = np.zeros((K * r, K * r), dtype=complex)
    for col, n in enumerate(basis.modes):
        weight = float(n) ** beta
        if weight == 0.0:
            continue
        for row, m in enumerate(basis.modes):
            block = table.boundary_z_mode(y, m - n)
            if np.any(block):
                out[row * r:(row + 1) * r, col * r:(col + 1) * r] = weight * block
    return out


def _fiber_projection_poly(table: CoefficientTable, beta: int, basis: FiberBasis) -> TrigPoly:
    """y-Fourier form of the block projection (exact: a is trigonometric in y)."""
    arr = table.layers.get(0)
    r = table.shape[0]
    K = basis.size
    if arr is None:
        return TrigPoly.constant(np.zeros((K * r, K * r)))
    my, mz = (arr.shape[0] - 1) // 2, (arr.shape[1] - 1) // 2
    out = np.zeros((2 * my + 1, K * r, K * r), dtype=complex)
    for col, n in enumerate(basis.modes):
        weight = float(n) ** beta
        if weight == 0.0:
            continue
        for row, m in enumerate(basis.modes):
            l = m - n
            if abs(l) <= mz:
                out[:, row * r:(row + 1) * r, col * r:(col + 1) * r] = weight * arr[:, l + mz]
    return TrigPoly(out)


def fiber_leakage(spec: WedgeOperatorSpec, basis: FiberBasis) -> float:
    """ℓ² size (Fourier coefficients in y) of the parts mapped outside the truncated span."""
    total = 0.0
    for (k, a, b), table in spec.coefficients.items():
        arr = table.layers.get(0)
        if a != 0 or arr is None:
            continue
        mz = (arr.shape[1] - 1) // 2
        for n in basis.modes:
            weight = float(n) ** b
            if weight == 0.0:
                continue
            for l in range(-mz, mz + 1):
                if basis.position(n + l) is None:
                    total += weight ** 2 * float(np.sum(np.abs(arr[:, l + mz]) ** 2))
    return float(np.sqrt(total))


# =============================================================================
# INDICIAL AND NORMAL FAMILIES
# =============================================================================

def indicial_family(spec: WedgeOperatorSpec, basis: FiberBasis) -> MatrixPolyFamily:
    """Indicial family ᵇP̂_y(σ): freeze x=0, drop xD_y, substitute xD_x -> σ, project the fiber.

    Issues TruncationWarning when the fiber operators leak outside the
    truncated mode span.
    """
    _require_square(spec)
    if basis.size < 1:
        raise ValueError("fiber basis must carry at least one mode")
    dim = basis.size * spec.rank_e
    by_power: Dict[int, TrigPoly] = {}
    for (k, a, b), table in spec.coefficients.items():
        if a != 0:
            continue
        block = _fiber_projection_poly(table, b, basis)
        by_power[k] = by_power[k] + block if k in by_power else block
    degree = max(by_power) if by_power else 0
    zero = TrigPoly.constant(np.zeros((dim, dim)))
    coeffs = tuple(by_power.get(j, zero).trimmed() for j in range(degree + 1))
    leak = fiber_leakage(spec, basis)
    if leak > LEAKAGE_TOL:
        logger.warning(f"Fiber truncation leaks {leak:.3e} outside {basis.size} modes")
        warnings.warn(f"fiber operators leak {leak:.3e} outside the truncated span", TruncationWarning)
    logger.info(f"Indicial family built: dim={dim}, degree={degree}")
    return MatrixPolyFamily(coeffs, label=spec.label)


def indicial_operator(spec: WedgeOperatorSpec, basis: FiberBasis, y: float) -> HalfLineOperator:
    """ᵇA_y = x^{-m} Σ a_{k0β}(0, y, z)(xD_x)^k D_z^β as a half-line term list."""
    _require_square(spec)
    terms: Dict[Tuple[int, int], np.ndarray] = {}
    for (k, a, b), table in spec.coefficients.items():
        if a != 0:
            continue
        block = _fiber_projection(table, b, basis, y)
        terms[(0, k)] = terms[(0, k)] + block if (0, k) in terms else block
    return _collect(terms, basis.size * spec.rank_e, spec.order, spec.gamma)


def normal_family(spec: WedgeOperatorSpec, basis: FiberBasis, y: float, eta: float) -> HalfLineOperator:
    """A_∧(η) = x^{-m} Σ a_{kαβ}(0, y, z)(xD_x)^k (xη)^α D_z^β.

    Terms are grouped by (x power |α|, power k); exactly vanishing terms are
    dropped, so η = 0 reproduces the indicial operator.
    """
    _require_square(spec)
    terms: Dict[Tuple[int, int], np.ndarray] = {}
    for (k, a, b), table in spec.coefficients.items():
        block = _fiber_projection(table, b, basis, y) * (eta ** a)
        key = (a, k)
        terms[key] = terms[key] + block if key in terms else block
    return _collect(terms, basis.size * spec.rank_e, spec.order, spec.gamma)


def kappa_conjugate(op: HalfLineOperator, rho: float) -> HalfLineOperator:
    """ϱ^m κ_ϱ ∘ op ∘ κ_ϱ^{-1} with (κ_ϱ u)(x) = ϱ^γ u(ϱx).

    xD_x commutes with κ_ϱ and x^{p-m} picks up ϱ^{p-m}; the ϱ^{±γ} weights cancel.
    """
    if rho <= 0:
        raise ValueError("dilation factor must be positive")
    # ϱ^m · ϱ^{p-m}; the weight ϱ^γ of κ_ϱ meets ϱ^{-γ} of its inverse
    terms = [HalfLineTerm(t.x_power, t.poly, t.matrix * rho ** t.x_power) for t in op.terms]
    return HalfLineOperator(op.dim, op.order, tuple(terms), op.gamma)

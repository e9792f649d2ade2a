# =============================================================================
# TRACE FIBERS
# =============================================================================
"""
Singular parts of F(y, σ)^{-1}·rhs(σ), their inverse-Mellin realizations

    τ(x) = Σ τ_{σℓ} x^{iσ} log^ℓ x,

kernel bases of the indicial operator built from them, the x∂_x
endomorphism on a basis, frame continuation over y and a quadrature Mellin
transform.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .core import (
    RANK_TOL,
    Contour,
    LogGrid,
    MatrixPolyFamily,
    Strip,
    cluster_points,
    sort_key,
)
from .errors import NotInvariant, PoleSeparationFailure, RankLoss
from .spectra import RESIDUAL_TOL, companion_solve, contour_solve, linearization_eigenvalues

logger = logging.getLogger(__name__)

POLE_MERGE_TOL = 1e-6
MIN_POLE_RADIUS = 1e-6
POLE_RADIUS_CAP = 0.1
RESIDUE_NODES = 128
XDX_TOL = 1e-8
KEY_TOL = 1e-8


# =============================================================================
# TYPES
# =============================================================================

@dataclass(frozen=True, eq=False)
class PolePart:
    """Principal part Σ_ℓ c_ℓ (σ - σ_p)^{-ℓ}; row ℓ-1 of ``coeffs`` holds c_ℓ."""

    sigma: complex
    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return int(self.coeffs.shape[0])


@dataclass(frozen=True, eq=False)
class SingularPart:
    dim: int
    parts: Tuple[PolePart, ...] = ()

    @property
    def poles(self) -> List[Tuple[complex, int]]:
        return [(p.sigma, p.order) for p in self.parts]

    def value(self, sigma) -> np.ndarray:
        sigma = np.asarray(sigma, dtype=complex)
        out = np.zeros(sigma.shape + (self.dim,), dtype=complex)
        for p in self.parts:
            d = sigma - p.sigma
            for l in range(1, p.order + 1):
                out += np.multiply.outer(d ** (-l), p.coeffs[l - 1])
        return out


@dataclass(frozen=True, eq=False)
class TraceTerm:
    sigma: complex
    ell: int
    coeff: np.ndarray


@dataclass(frozen=True, eq=False)
class TraceElement:
    """Σ_terms coeff · x^{iσ} log^ℓ x with values in ℂ^dim."""

    dim: int
    terms: Tuple[TraceTerm, ...] = ()

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (self.dim,), dtype=complex)
        logx = np.log(x)
        for t in self.terms:
            out += np.multiply.outer(np.exp(1j * t.sigma * logx) * logx ** t.ell, t.coeff)
        return out

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(np.abs(t.coeff) ** 2) for t in self.terms)))

    @property
    def max_log_power(self) -> int:
        return max((t.ell for t in self.terms), default=0)

    def scaled(self, factor: complex) -> "TraceElement":
        return TraceElement(self.dim, tuple(TraceTerm(t.sigma, t.ell, t.coeff * factor) for t in self.terms))

    def __add__(self, other: "TraceElement") -> "TraceElement":
        return _combine(self.dim, list(self.terms) + list(other.terms))

    def __sub__(self, other: "TraceElement") -> "TraceElement":
        return self + other.scaled(-1.0)

    def normalized(self) -> "TraceElement":
        """Unit coefficient norm, largest-magnitude coefficient real positive."""
        n = self.norm()
        if n == 0.0:
            return self
        flat = np.concatenate([t.coeff for t in self.terms])
        k = int(np.argmax(np.abs(flat)))
        return self.scaled(abs(flat[k]) / (flat[k] * n))


class FrameProvenance(str, Enum):
    CONTINUED = "continued"
    ASSEMBLED = "assembled"


@dataclass(frozen=True, eq=False)
class TraceFrame:
    """Pointwise bases of the trace fibers over a y grid."""

    y_grid: Tuple[float, ...]
    elements: Tuple[Tuple[TraceElement, ...], ...]
    provenance: FrameProvenance
    base_point: Optional[float] = None

    @property
    def rank(self) -> int:
        return len(self.elements[0]) if self.elements else 0


def _combine(dim: int, terms: Sequence[TraceTerm], tol: float = KEY_TOL) -> TraceElement:
    """Merge terms with equal (σ, ℓ) and drop exact zeros."""
    merged: List[TraceTerm] = []
    for t in terms:
        for i, m in enumerate(merged):
            if m.ell == t.ell and abs(m.sigma - t.sigma) < tol * max(1.0, abs(t.sigma)):
                merged[i] = TraceTerm(m.sigma, m.ell, m.coeff + t.coeff)
                break
        else:
            merged.append(TraceTerm(complex(t.sigma), int(t.ell), np.asarray(t.coeff, dtype=complex)))
    kept = [t for t in merged if np.any(t.coeff)]
    kept.sort(key=lambda t: sort_key(t.sigma) + (t.ell,))
    return TraceElement(dim, tuple(kept))


def coefficient_matrix(elements: Sequence[TraceElement], tol: float = KEY_TOL) -> Tuple[np.ndarray, List[Tuple[complex, int]]]:
    """Stack coefficient vectors over the union of (σ, ℓ) keys; one column per element."""
    sigmas = [t.sigma for e in elements for t in e.terms]
    if not sigmas:
        return np.zeros((0, len(elements)), dtype=complex), []
    scale = max(1.0, max(abs(s) for s in sigmas))
    groups = cluster_points(sigmas, tol * scale)
    label = {}
    centers = []
    for g, members in enumerate(groups):
        centers.append(complex(np.mean(np.asarray(sigmas)[members])))
        for m in members:
            label[m] = g
    keys = sorted({(label[i], t.ell) for i, t in enumerate(t for e in elements for t in e.terms)})
    index = {k: n for n, k in enumerate(keys)}
    dim = elements[0].dim
    M = np.zeros((len(keys) * dim, len(elements)), dtype=complex)
    i = 0
    for col, e in enumerate(elements):
        for t in e.terms:
            row = index[(label[i], t.ell)]
            M[row * dim:(row + 1) * dim, col] += t.coeff
            i += 1
    return M, [(centers[g], l) for g, l in keys]


# =============================================================================
# SINGULAR PARTS
# =============================================================================

def _pole_radius(sigma: complex, others: np.ndarray, cap: float, min_radius: float) -> float:
    gaps = np.abs(others - sigma)
    gaps = gaps[gaps > 0]
    half = 0.5 * float(np.min(gaps)) if gaps.size else np.inf
    return max(min(half, cap), min_radius)


def _pole_part(
    F: MatrixPolyFamily,
    y: float,
    sigma: complex,
    order: int,
    radius: float,
    rhs: np.ndarray,
    nodes: int = RESIDUE_NODES,
) -> np.ndarray:
    """c_ℓ = (1/2πi)∮_{|ζ-σ|=ρ} (ζ-σ)^{ℓ-1} F(ζ)^{-1} rhs(ζ) dζ for ℓ = 1..order."""
    circle = Contour.circle(sigma, radius, nodes)
    z, w = circle.nodes_and_weights()
    inv = np.linalg.inv(F.evaluate(y, z))
    rhs_values = np.stack([np.polynomial.polynomial.polyval(z, rhs[:, i]) for i in range(rhs.shape[1])], axis=-1)
    values = np.einsum("nab,nb->na", inv, rhs_values)
    d = z - sigma
    return np.stack([np.tensordot(w * d ** (l - 1), values, axes=1) for l in range(1, order + 1)])


def locate_poles(
    F: MatrixPolyFamily,
    y: float,
    region: Contour,
    strip: Optional[Strip] = None,
    solver: str = "companion",
    pole_merge_tol: float = POLE_MERGE_TOL,
) -> Tuple[List[Tuple[complex, int]], np.ndarray]:
    """Poles (σ, algebraic multiplicity) of F(y, ·)^{-1} inside the region, plus all finite roots."""
    every = linearization_eigenvalues(F, y)
    if solver == "contour":
        points = contour_solve(F, y, region, match_tol=pole_merge_tol)
        poles = [(p.sigma, p.algebraic) for p in points]
    else:
        inside = np.array([e for e in every if region.contains(e)], dtype=complex)
        tol = pole_merge_tol * max(1.0, float(np.max(np.abs(inside)))) if inside.size else 0.0
        poles = [(complex(np.mean(inside[g])), len(g)) for g in cluster_points(inside, tol)]
    if strip is not None:
        poles = [(s, k) for s, k in poles if strip.contains(s)]
    poles.sort(key=lambda p: sort_key(p[0]))
    return poles, every


def singular_part(
    F: MatrixPolyFamily,
    y: float,
    region: Contour,
    rhs: np.ndarray,
    strip: Optional[Strip] = None,
    solver: str = "companion",
    rank_tol: float = RANK_TOL,
    pole_merge_tol: float = POLE_MERGE_TOL,
    min_pole_radius: float = MIN_POLE_RADIUS,
    poles: Optional[Sequence[Tuple[complex, int]]] = None,
) -> SingularPart:
    """Principal part of σ ↦ F(y, σ)^{-1} rhs(σ) at the poles inside the region.

    Args:
        F: Indicial family.
        y: Edge parameter.
        region: Contour Ω; poles strictly inside it are used.
        rhs: Polynomial with vector coefficients, shape (degree+1, r), lowest power first.
        strip: Optional strip; residue circles are capped at 0.1 of its height.
        solver: "companion" (default) or "contour" for locating poles.
        poles: Precomputed (σ, multiplicity) list used in place of locate_poles;
            the finite roots of F(y, ·) are still computed to size the residue circles.

    Raises:
        PoleSeparationFailure: two distinct poles closer than 4 · min_pole_radius.
    """
    rhs = np.atleast_2d(np.asarray(rhs, dtype=complex))
    if rhs.shape[1] != F.dim:
        raise ValueError(f"rhs has {rhs.shape[1]} components, family dimension is {F.dim}")
    if poles is None:
        poles, every = locate_poles(F, y, region, strip, solver, pole_merge_tol)
    else:
        poles, every = list(poles), linearization_eigenvalues(F, y)
    centers = np.array([s for s, _ in poles], dtype=complex)
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            if abs(centers[i] - centers[j]) < 4.0 * min_pole_radius:
                raise PoleSeparationFailure(
                    f"poles {centers[i]:.6g} and {centers[j]:.6g} are not separable",
                    {"y": y, "distance": float(abs(centers[i] - centers[j]))},
                )
    cap = POLE_RADIUS_CAP * (strip.height if strip is not None else region.radius)
    others_all = np.concatenate([every, centers])
    raw = []
    for sigma, mult in poles:
        others = others_all[np.abs(others_all - sigma) > pole_merge_tol * max(1.0, abs(sigma))]
        radius = _pole_radius(sigma, others, cap, min_pole_radius)
        raw.append((sigma, _pole_part(F, y, sigma, mult, radius, rhs)))
    scale = max([float(np.max(np.abs(c))) for _, c in raw] + [0.0])
    parts = []
    for sigma, coeffs in raw:
        coeffs = coeffs.copy()
        coeffs[np.linalg.norm(coeffs, axis=1) < rank_tol * max(scale, 1e-300)] = 0.0
        nonzero = np.flatnonzero(np.any(coeffs != 0, axis=1))
        if nonzero.size:
            parts.append(PolePart(complex(sigma), coeffs[:nonzero[-1] + 1]))
    return SingularPart(F.dim, tuple(parts))


# =============================================================================
# INVERSE MELLIN
# =============================================================================

def to_trace_element(sp: SingularPart) -> TraceElement:
    """c(σ-σ₀)^{-k} ↦ (-i)(i log x)^{k-1}/(k-1)! · c · x^{iσ₀}, termwise."""
    terms = []
    for p in sp.parts:
        for k in range(1, p.order + 1):
            c = p.coeffs[k - 1]
            if np.any(c):
                factor = -1j * (1j ** (k - 1)) / math.factorial(k - 1)
                terms.append(TraceTerm(p.sigma, k - 1, factor * c))
    return _combine(sp.dim, terms)


def to_singular_part(tau: TraceElement) -> SingularPart:
    """Inverse of to_trace_element."""
    by_pole: Dict[int, Tuple[complex, Dict[int, np.ndarray]]] = {}
    keys: List[complex] = []
    for t in tau.terms:
        for i, s in enumerate(keys):
            if abs(s - t.sigma) < KEY_TOL * max(1.0, abs(s)):
                break
        else:
            keys.append(t.sigma)
            i = len(keys) - 1
        factor = -1j * (1j ** t.ell) / math.factorial(t.ell)
        by_pole.setdefault(i, (keys[i], {}))[1][t.ell + 1] = t.coeff / factor
    parts = []
    for i in range(len(keys)):
        sigma, coeffs = by_pole[i]
        order = max(coeffs)
        arr = np.zeros((order, tau.dim), dtype=complex)
        for k, c in coeffs.items():
            arr[k - 1] = c
        parts.append(PolePart(sigma, arr))
    return SingularPart(tau.dim, tuple(parts))


def apply_xdx(tau: TraceElement, power: int = 1) -> TraceElement:
    """(xD_x)^power τ."""
    current = tau
    for _ in range(power):
        terms = [TraceTerm(t.sigma, t.ell, t.sigma * t.coeff) for t in current.terms]
        terms += [TraceTerm(t.sigma, t.ell - 1, -1j * t.ell * t.coeff) for t in current.terms if t.ell > 0]
        current = _combine(tau.dim, terms)
    return current


def apply_indicial(F: MatrixPolyFamily, y: float, tau: TraceElement, order: Optional[int] = None) -> TraceElement:
    """x^{-m} P(xD_x) τ with P(σ) = F(y, σ), by the exact shift rules.

    (xD_x)(x^{iσ} log^ℓ x) = σ x^{iσ} log^ℓ x - iℓ x^{iσ} log^{ℓ-1} x, and the
    factor x^{-m} moves σ to σ + im.
    """
    m = F.degree if order is None else int(order)
    C = F.coefficients(y)
    out: List[TraceTerm] = []
    groups: Dict[int, Tuple[complex, Dict[int, np.ndarray]]] = {}
    keys: List[complex] = []
    for t in tau.terms:
        for i, s in enumerate(keys):
            if abs(s - t.sigma) < KEY_TOL * max(1.0, abs(s)):
                break
        else:
            keys.append(t.sigma)
            i = len(keys) - 1
        bucket = groups.setdefault(i, (keys[i], {}))[1]
        bucket[t.ell] = bucket.get(t.ell, 0) + t.coeff
    for i in range(len(keys)):
        sigma, bucket = groups[i]
        top = max(bucket)
        current = np.zeros((top + 1, tau.dim), dtype=complex)
        for l, c in bucket.items():
            current[l] = c
        result = np.zeros_like(current)
        for j in range(C.shape[0]):
            result += current @ C[j].T
            shifted = sigma * current
            shifted[:-1] += -1j * np.arange(1, top + 1)[:, None] * current[1:]
            current = shifted
        for l in range(top + 1):
            out.append(TraceTerm(sigma + 1j * m, l, result[l]))
    return _combine(tau.dim, out)


# =============================================================================
# KERNEL BASES
# =============================================================================

def strip_region(strip: Strip, roots: Sequence[complex] = (), margin: float = 1.0,
                 nodes: int = 256) -> Contour:
    """Rectangle spanning the strip's height and covering the given roots in Re."""
    width = max([abs(complex(r).real) for r in roots] + [0.0]) + margin
    return Contour.rectangle(1j * strip.midline, width, strip.height / 2.0, nodes)


def _monomial_rhs(dim: int, component: int, center: complex, power: int) -> np.ndarray:
    """Coefficients of e_i (σ - center)^power, lowest power first."""
    rhs = np.zeros((power + 1, dim), dtype=complex)
    for n in range(power + 1):
        rhs[n, component] = math.comb(power, n) * (-center) ** (power - n)
    return rhs


def trace_fiber_basis(
    F: MatrixPolyFamily,
    y: float,
    strip: Strip,
    region: Optional[Contour] = None,
    rank_tol: float = RANK_TOL,
    residual_tol: float = RESIDUAL_TOL,
    pole_merge_tol: float = POLE_MERGE_TOL,
    min_pole_radius: float = MIN_POLE_RADIUS,
    order: Optional[int] = None,
) -> List[TraceElement]:
    """Basis of the trace fiber 𝒯_y = 𝔰(ker ᵇP̂_y) as normalized trace elements.

    Candidates per pole σ_p of multiplicity μ are the singular parts of
    F^{-1} e_i (σ - σ_p)^k, k < μ; pivoted QR keeps μ independent ones.
    Elements come sorted by pole, then by highest log power.
    """
    points = companion_solve(F, y, strip, match_tol=pole_merge_tol)
    region = region or strip_region(strip, [p.sigma for p in points])
    poles = [(p.sigma, p.algebraic) for p in points if region.contains(p.sigma)]
    every = linearization_eigenvalues(F, y)
    cap = POLE_RADIUS_CAP * strip.height
    basis: List[TraceElement] = []
    for sigma, mult in poles:
        others = every[np.abs(every - sigma) > pole_merge_tol * max(1.0, abs(sigma))]
        for s2, _ in poles:
            if s2 != sigma and abs(s2 - sigma) < 4.0 * min_pole_radius:
                raise PoleSeparationFailure(f"poles {sigma:.6g} and {s2:.6g} are not separable", {"y": y})
        radius = _pole_radius(sigma, others, cap, min_pole_radius)
        candidates = []
        for k in range(mult):
            for i in range(F.dim):
                coeffs = _pole_part(F, y, sigma, mult, radius, _monomial_rhs(F.dim, i, sigma, k))
                scale = max(float(np.max(np.abs(coeffs))), 1e-300)
                coeffs[np.linalg.norm(coeffs, axis=1) < rank_tol * scale] = 0.0
                nonzero = np.flatnonzero(np.any(coeffs != 0, axis=1))
                if nonzero.size:
                    sp = SingularPart(F.dim, (PolePart(sigma, coeffs[:nonzero[-1] + 1]),))
                    candidates.append(to_trace_element(sp).normalized())
        if not candidates:
            raise RankLoss(f"no kernel candidates at pole {sigma:.6g}", {"y": y})
        M, _ = coefficient_matrix(candidates)
        _, R, piv = scipy.linalg.qr(M, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > 1e-8 * diag[0]))
        if rank < mult:
            raise RankLoss(
                f"kernel candidates at σ={sigma:.6g} have rank {rank} < multiplicity {mult}",
                {"y": y, "sigma": [sigma.real, sigma.imag]},
            )
        chosen = sorted(piv[:mult], key=lambda c: (candidates[c].max_log_power, list(piv).index(c)))
        basis.extend(candidates[c] for c in chosen)
    for tau in basis:
        res = apply_indicial(F, y, tau, order).norm()
        if res > residual_tol:
            logger.warning(f"Kernel residual {res:.3e} above tolerance at y={y:.6f}")
    logger.info(f"Trace fiber at y={y:.6f}: dimension {len(basis)} from {len(poles)} poles")
    return basis


def xdx_endomorphism(basis: Sequence[TraceElement], tol: float = XDX_TOL) -> np.ndarray:
    """Matrix of x∂_x in the basis; x∂_x(x^{iσ} log^ℓ x) = iσ(·) + ℓ x^{iσ} log^{ℓ-1} x.

    Raises:
        NotInvariant: the image leaves the span beyond tol (relative).
    """
    if not basis:
        return np.zeros((0, 0), dtype=complex)
    images = []
    for tau in basis:
        terms = [TraceTerm(t.sigma, t.ell, 1j * t.sigma * t.coeff) for t in tau.terms]
        terms += [TraceTerm(t.sigma, t.ell - 1, t.ell * t.coeff) for t in tau.terms if t.ell > 0]
        images.append(_combine(tau.dim, terms))
    M, _ = coefficient_matrix(list(basis) + images)
    n = len(basis)
    A, B = M[:, :n], M[:, n:]
    if np.linalg.matrix_rank(A, tol=1e-10 * max(np.linalg.norm(A, 2), 1e-300)) < n:
        raise ValueError("basis is linearly dependent")
    X, *_ = np.linalg.lstsq(A, B, rcond=None)
    residual = float(np.linalg.norm(A @ X - B)) / max(float(np.linalg.norm(B)), 1.0)
    if residual > tol:
        raise NotInvariant(f"x∂_x leaves the span (residual {residual:.3e})", {"residual": residual})
    return X


# =============================================================================
# FRAMES OVER Y
# =============================================================================

def polynomial_numerator(
    F: MatrixPolyFamily,
    y: float,
    sp: SingularPart,
    degree: Optional[int] = None,
    samples: Optional[int] = None,
) -> np.ndarray:
    """Coefficients of the polynomial F(y, σ)·sp(σ) (entire for kernel elements).

    Fits by a DFT of samples on a circle enclosing every pole.
    """
    degree = F.degree - 1 if degree is None else degree
    n = samples or max(4 * (degree + 1), 16)
    R = 1.0 + 2.0 * max([abs(s) for s, _ in sp.poles] + [0.0])
    theta = 2.0 * np.pi * np.arange(n) / n
    z = R * np.exp(1j * theta)
    g = np.einsum("nab,nb->na", F.evaluate(y, z), sp.value(z))
    spectrum = np.fft.fft(g, axis=0) / n
    coeffs = spectrum[:degree + 1] / (R ** np.arange(degree + 1))[:, None]
    tail = float(np.max(np.abs(spectrum[degree + 1:]))) if n > degree + 1 else 0.0
    if tail > 1e-8 * max(float(np.max(np.abs(spectrum))), 1e-300):
        logger.warning(f"Numerator is not polynomial of degree {degree} (tail {tail:.3e})")
    return coeffs


def frame_continuation(
    F: MatrixPolyFamily,
    y0: float,
    y_grid: Sequence[float],
    strip: Strip,
    region: Optional[Contour] = None,
    rank_tol: float = RANK_TOL,
    pole_merge_tol: float = POLE_MERGE_TOL,
    min_pole_radius: float = MIN_POLE_RADIUS,
    mapper: Optional[Callable] = None,
) -> TraceFrame:
    """Continue the basis at y₀ to χ_j(y) = 𝔰_Ω[F(y)^{-1} F(y₀) χ_j(y₀)].

    Raises:
        RankLoss: the continued frame drops rank at a grid point.
    """
    basis0 = trace_fiber_basis(F, y0, strip, region, rank_tol, pole_merge_tol=pole_merge_tol,
                               min_pole_radius=min_pole_radius)
    if region is None:
        roots = [s for s in linearization_eigenvalues(F, y0) if strip.contains(s)]
        region = strip_region(strip, roots)
    numerators = [polynomial_numerator(F, y0, to_singular_part(tau)) for tau in basis0]
    mapper = mapper or map

    def continue_at(y: float) -> Tuple[TraceElement, ...]:
        elements = tuple(
            to_trace_element(singular_part(F, y, region, rhs, strip, rank_tol=rank_tol,
                                           pole_merge_tol=pole_merge_tol, min_pole_radius=min_pole_radius))
            for rhs in numerators
        )
        M, _ = coefficient_matrix(elements)
        s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(1)
        if s.size < len(elements) or s[-1] < rank_tol * max(s[0], 1e-300):
            raise RankLoss(f"continued frame loses rank at y={y:.6f}", {"y": y, "min_singular_value": float(s[-1])})
        return elements

    ys = tuple(float(y) for y in y_grid)
    elements = tuple(mapper(continue_at, ys))
    logger.info(f"Frame continued from y0={y0:.6f} over {len(ys)} points (rank {len(basis0)})")
    return TraceFrame(ys, elements, FrameProvenance.CONTINUED, float(y0))


def assembled_frame(
    F: MatrixPolyFamily,
    y_grid: Sequence[float],
    strip: Strip,
    mapper: Optional[Callable] = None,
    **kwargs,
) -> TraceFrame:
    """Per-y normalized bases (no continuation)."""
    mapper = mapper or map
    ys = tuple(float(y) for y in y_grid)
    elements = tuple(tuple(b) for b in mapper(lambda y: trace_fiber_basis(F, y, strip, **kwargs), ys))
    return TraceFrame(ys, elements, FrameProvenance.ASSEMBLED)


# =============================================================================
# MELLIN TRANSFORM AND DILATION
# =============================================================================

def mellin_quadrature(values: np.ndarray, grid: LogGrid, sigma: complex) -> complex:
    """∫ x^{-iσ} f(x) dx/x on the grid, f = ω·u sampled at grid.x.

    Vector-valued samples (n, r) give an r-vector.
    """
    values = np.asarray(values, dtype=complex)
    kernel = grid.weights * np.exp(-1j * sigma * grid.t)
    return np.tensordot(kernel, values, axes=1)


def dilate_trace_element(tau: TraceElement, rho: float, gamma: float) -> TraceElement:
    """(κ_ϱ τ)(x) = ϱ^γ τ(ϱx), re-expanding log^ℓ(ϱx) binomially."""
    if rho <= 0:
        raise ValueError("dilation factor must be positive")
    L = np.log(rho)
    terms = []
    for t in tau.terms:
        weight = rho ** gamma * np.exp(1j * t.sigma * L)
        for k in range(t.ell + 1):
            terms.append(TraceTerm(t.sigma, k, weight * math.comb(t.ell, k) * L ** (t.ell - k) * t.coeff))
    return _combine(tau.dim, terms)

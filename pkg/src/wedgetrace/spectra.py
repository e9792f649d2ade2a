# =============================================================================
# BOUNDARY SPECTRA
# =============================================================================
"""
Boundary spectrum of an indicial family inside a strip.

Two independent solvers:
    - companion_solve: block companion pencil (scipy.linalg.eig), the oracle;
    - contour_solve: block-Hankel moments of F^{-1} on a closed contour, sized
      by the argument-principle count and refined on small local circles.

Both attach Jordan data computed from the kernel dimensions of the block
Toeplitz matrices of Taylor coefficients of F at the root.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .core import (
    RANK_TOL,
    Contour,
    MatrixPolyFamily,
    Strip,
    assert_contour_admissible,
    cluster_points,
    sort_key,
)
from .errors import (
    DegenerateFamily,
    IncompleteSpectrum,
    MatchingAmbiguity,
    NodeOnSingularity,
    RankDeficientProbe,
)

logger = logging.getLogger(__name__)

MATCH_TOL = 1e-7
RESIDUAL_TOL = 1e-6
JORDAN_DEPTH = 3
JORDAN_REL_TOL = 1e-8
HANKEL_GAP = 1e-2
LOCAL_NODES = 128
CONTOUR_RETRIES = 2
SPECB_TOL = 1e-6

# fixed probes for the det ≡ 0 test
_GENERIC_POINTS = (0.3711 + 0.2137j, -1.2903 + 0.6991j, 2.0817 - 0.4133j)


class SolverMethod(str, Enum):
    COMPANION = "companion"
    CONTOUR = "contour"


@dataclass
class SpectrumPoint:
    """A root σ of F(y, ·) with its Jordan structure and null vectors.

    ``residual_ok`` is False when the null-vector residual exceeds residual_tol.
    """

    sigma: complex
    y: float
    algebraic: int
    partials: Tuple[int, ...]
    residual: float
    method: SolverMethod
    vectors: Optional[np.ndarray] = None
    jordan_resolved: bool = True
    residual_ok: bool = True

    @property
    def geometric(self) -> int:
        return len(self.partials)


@dataclass
class SpectrumCurve:
    """One tracked branch of the edge spectrum over the y grid."""

    curve_id: int
    samples: List[Tuple[float, SpectrumPoint]] = field(default_factory=list)
    collisions: List[float] = field(default_factory=list)
    ambiguities: List[float] = field(default_factory=list)


@dataclass
class FiniteSpecbReport:
    passed: bool
    offending: List[Tuple[float, complex]]


@dataclass
class ContourCount:
    """Argument-principle count (1/2πi)∮ tr(F^{-1}F') dσ."""

    count: int
    value: complex
    defect: float


# =============================================================================
# HELPERS
# =============================================================================

def _normalize_columns(V: np.ndarray) -> np.ndarray:
    out = np.array(V, dtype=complex)
    for j in range(out.shape[1]):
        col = out[:, j]
        col = col / np.linalg.norm(col)
        k = int(np.argmax(np.abs(col)))
        out[:, j] = col * (abs(col[k]) / col[k])
    return out


def _check_not_degenerate(F: MatrixPolyFamily, y: float, rank_tol: float) -> np.ndarray:
    C = F.coefficients(y)
    if not np.any(C):
        raise DegenerateFamily(f"all coefficients vanish at y={y}", {"y": y})
    scale = F.scale(y)
    for z in _GENERIC_POINTS:
        s = np.linalg.svd(F.evaluate(y, z), compute_uv=False)
        if s[-1] > rank_tol * scale * max(1.0, abs(z)) ** F.degree:
            return C
    raise DegenerateFamily(f"family is singular for every sampled σ at y={y}", {"y": y})


def taylor_coefficients(
    F: MatrixPolyFamily,
    y: float,
    sigma: complex,
    count: int,
    radius: Optional[float] = None,
    nodes: int = 64,
) -> np.ndarray:
    """F_k = ∂_σ^k F(y, σ)/k! for k < count.

    Exact for the polynomial family unless ``radius`` is given, in which case
    the Cauchy moments (1/2πi)∮ F(ζ)(ζ-σ)^{-k-1} dζ on that circle are used.
    """
    if radius is None:
        C = F.coefficients(y)
        d = C.shape[0] - 1
        out = np.zeros((count,) + C.shape[1:], dtype=complex)
        for k in range(min(count, d + 1)):
            for n in range(k, d + 1):
                out[k] += math.comb(n, k) * sigma ** (n - k) * C[n]
        return out
    circle = Contour.circle(sigma, radius, nodes)
    z, w = circle.nodes_and_weights()
    values = F.evaluate(y, z)
    offset = z - sigma
    return np.stack([np.tensordot(w * offset ** (-k - 1), values, axes=1) for k in range(count)])


def jordan_profile(
    F: MatrixPolyFamily,
    y: float,
    sigma: complex,
    algebraic: int,
    radius: Optional[float] = None,
    rel_tol: float = JORDAN_REL_TOL,
) -> Tuple[Tuple[int, ...], bool]:
    """Partial multiplicities of σ from dim ker T_j, T_j the lower block Toeplitz of F_0..F_{j-1}.

    dim ker T_j = Σ_i min(j, p_i); resolved up to chains of length 3.
    Longer chains absorb the remaining multiplicity and come back unresolved.
    """
    if algebraic <= 1:
        return (1,), True
    r = F.dim
    Fk = taylor_coefficients(F, y, sigma, JORDAN_DEPTH, radius)
    scale = max(float(np.linalg.norm(Fk.reshape(-1, r), 2)), 1e-300)
    kernel = [0]
    for j in range(1, JORDAN_DEPTH + 1):
        T = np.zeros((j * r, j * r), dtype=complex)
        for a in range(j):
            for b in range(a + 1):
                T[a * r:(a + 1) * r, b * r:(b + 1) * r] = Fk[a - b]
        s = np.linalg.svd(T, compute_uv=False)
        kernel.append(int(j * r - np.sum(s > rel_tol * scale)))
    at_least = [kernel[j] - kernel[j - 1] for j in range(1, JORDAN_DEPTH + 1)]
    counts = {1: at_least[0] - at_least[1], 2: at_least[1] - at_least[2], 3: at_least[2]}
    partials = [3] * counts[3] + [2] * counts[2] + [1] * counts[1]
    total = sum(partials)
    if total == algebraic and partials:
        return tuple(partials), True
    if counts[3] > 0 and total < algebraic:
        partials[0] += algebraic - total
        logger.warning(f"Jordan chain at σ={sigma:.6g} longer than {JORDAN_DEPTH}; reported unresolved")
        return tuple(partials), False
    raise RankDeficientProbe(
        f"rank profile {kernel} inconsistent with multiplicity {algebraic} at σ={sigma}",
        {"y": y, "sigma": [sigma.real, sigma.imag], "kernel_dims": kernel},
    )


def _null_vectors(F: MatrixPolyFamily, y: float, sigma: complex, count: int) -> Tuple[np.ndarray, float]:
    M = F.evaluate(y, sigma)
    _, _, vh = np.linalg.svd(M)
    V = _normalize_columns(vh[-count:].conj().T)
    residual = float(max(np.linalg.norm(M @ V[:, j]) for j in range(V.shape[1])))
    return V, residual


def _make_points(
    F: MatrixPolyFamily,
    y: float,
    eigenvalues: np.ndarray,
    method: SolverMethod,
    match_tol: float,
    residual_tol: float,
    taylor_radius: Optional[float] = None,
) -> List[SpectrumPoint]:
    if eigenvalues.size == 0:
        return []
    tol = match_tol * max(1.0, float(np.max(np.abs(eigenvalues))))
    points = []
    for members in cluster_points(eigenvalues, tol):
        sigma = complex(np.mean(eigenvalues[members]))
        algebraic = len(members)
        partials, resolved = jordan_profile(F, y, sigma, algebraic, taylor_radius)
        vectors, residual = _null_vectors(F, y, sigma, len(partials))
        residual_ok = residual <= residual_tol
        if not residual_ok:
            logger.warning(f"Residual {residual:.3e} above tolerance at y={y:.6f}, σ={sigma:.6g}")
        points.append(SpectrumPoint(sigma, float(y), algebraic, partials, residual, method, vectors, resolved,
                                    residual_ok))
    points.sort(key=lambda p: sort_key(p.sigma))
    return points


# =============================================================================
# COMPANION (LINEARIZATION) SOLVER
# =============================================================================

def linearization_eigenvalues(F: MatrixPolyFamily, y: float, rank_tol: float = RANK_TOL) -> np.ndarray:
    """All finite eigenvalues of the block companion pencil of F(y, ·).

    A singular leading coefficient yields infinite eigenvalues of the pencil,
    which are dropped.
    """
    C = _check_not_degenerate(F, y, rank_tol)
    scale = F.scale(y)
    d = C.shape[0] - 1
    while d > 0 and np.linalg.norm(C[d], 2) <= 1e-14 * scale:
        d -= 1
    if d == 0:
        return np.zeros(0, dtype=complex)
    r = F.dim
    n = d * r
    A = np.zeros((n, n), dtype=complex)
    B = np.eye(n, dtype=complex)
    if d > 1:
        A[:-r, r:] = np.eye((d - 1) * r)
    A[-r:, :] = -np.hstack([C[j] for j in range(d)])
    B[-r:, -r:] = C[d]
    alpha_beta = scipy.linalg.eig(A, B, right=False, homogeneous_eigvals=True)
    alpha, beta = alpha_beta[0], alpha_beta[1]
    finite = np.abs(beta) > 1e-13 * np.maximum(np.abs(alpha), 1.0)
    return alpha[finite] / beta[finite]


def companion_solve(
    F: MatrixPolyFamily,
    y: float,
    strip: Strip,
    match_tol: float = MATCH_TOL,
    residual_tol: float = RESIDUAL_TOL,
    rank_tol: float = RANK_TOL,
) -> List[SpectrumPoint]:
    """Roots of F(y, ·) strictly inside the strip, by linearization.

    Raises:
        DegenerateFamily: all coefficients vanish, or det F(y, ·) ≡ 0.
    """
    eigs = linearization_eigenvalues(F, y, rank_tol)
    inside = np.array([e for e in eigs if strip.contains(e)], dtype=complex)
    return _make_points(F, y, inside, SolverMethod.COMPANION, match_tol, residual_tol)


# =============================================================================
# CONTOUR (MOMENT) SOLVER
# =============================================================================

def _resolvents(F: MatrixPolyFamily, y: float, contour: Contour) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    z, w = contour.nodes_and_weights()
    values = F.evaluate(y, z)
    try:
        inv = np.linalg.inv(values)
    except np.linalg.LinAlgError as e:
        raise NodeOnSingularity(f"family singular at a node of the contour: {e}", {"y": y})
    if not np.all(np.isfinite(inv)):
        raise NodeOnSingularity("resolvent not finite on the contour", {"y": y})
    return z, w, inv


def count_in_contour(
    F: MatrixPolyFamily,
    y: float,
    contour: Contour,
    rank_tol: float = RANK_TOL,
) -> ContourCount:
    """Total algebraic multiplicity inside the contour via the argument principle."""
    assert_contour_admissible(F, y, contour, rank_tol)
    z, w, inv = _resolvents(F, y, contour)
    dF = F.derivative(y, z)
    traces = np.einsum("nab,nba->n", inv, dF)
    value = complex(np.sum(w * traces))
    count = int(np.rint(value.real))
    return ContourCount(count, value, float(abs(value - count)))


def _hankel_eigenvalues(
    F: MatrixPolyFamily,
    y: float,
    contour: Contour,
    count: int,
    probe: np.ndarray,
    rank_tol: float,
) -> np.ndarray:
    """Eigenvalues from block-Hankel moments A_p = (1/2πi)∮ s^p F^{-1} V, s = (σ-c)/R."""
    z, w, inv = _resolvents(F, y, contour)
    scaled = (z - contour.center) / contour.radius
    sketched = inv @ probe
    ell = probe.shape[1]
    first = max(1, math.ceil(count / ell))
    for L in range(first, first + 3):
        moments = [np.tensordot(w * scaled ** p, sketched, axes=1) for p in range(2 * L)]
        H0 = np.block([[moments[i + j] for j in range(L)] for i in range(L)])
        H1 = np.block([[moments[i + j + 1] for j in range(L)] for i in range(L)])
        u, s, vh = np.linalg.svd(H0)
        if s.size < count or s[0] == 0.0 or s[count - 1] < rank_tol * s[0]:
            continue
        if s.size > count and s[count] > HANKEL_GAP * s[count - 1]:
            raise RankDeficientProbe(
                f"no clear rank gap at {count}: σ_k={s[count - 1]:.3e}, σ_k+1={s[count]:.3e}",
                {"y": y, "singular_values": [float(v) for v in s[:count + 1]]},
            )
        U, S, W = u[:, :count], s[:count], vh[:count].conj().T
        reduced = U.conj().T @ H1 @ W / S[None, :]
        return contour.center + contour.radius * np.linalg.eigvals(reduced)
    raise RankDeficientProbe(
        f"moment rank saturated below the count {count} (probe rank {ell})",
        {"y": y, "count": count, "probe_rank": ell},
    )


def _local_circle(spread: float, gap: float, limit: float, widen: float = 1.0) -> float:
    spread = max(spread, 1e-3 * limit)
    if not np.isfinite(gap):
        return min(4.0 * widen * spread, limit)
    # disjoint from the circles around the other groups
    return min(widen * math.sqrt(spread * gap), 0.5 * gap, limit)


def _refine_locally(
    F: MatrixPolyFamily,
    y: float,
    contour: Contour,
    count: int,
    probe: np.ndarray,
    rank_tol: float,
    widen: float,
) -> np.ndarray:
    """Roots inside the contour, re-solved on small circles around the grouped global estimates."""
    estimates = _hankel_eigenvalues(F, y, contour, count, probe, rank_tol)
    refined: List[complex] = []
    for members in cluster_points(estimates, 0.05 * contour.radius):
        center = complex(np.mean(estimates[members]))
        spread = float(np.max(np.abs(estimates[members] - center)))
        others = np.delete(estimates, members)
        gap = float(np.min(np.abs(others - center))) if others.size else np.inf
        radius = _local_circle(spread, gap, 0.5 * contour.radius, widen)
        local = Contour.circle(center, radius, LOCAL_NODES)
        n_local = count_in_contour(F, y, local, rank_tol).count
        if n_local:
            refined.extend(_hankel_eigenvalues(F, y, local, n_local, probe, rank_tol))
    return np.array([e for e in refined if contour.contains(e)], dtype=complex)


def contour_solve(
    F: MatrixPolyFamily,
    y: float,
    contour: Contour,
    probe_rank: Optional[int] = None,
    match_tol: float = MATCH_TOL,
    residual_tol: float = RESIDUAL_TOL,
    rank_tol: float = RANK_TOL,
    seed: int = 0,
    retries: int = CONTOUR_RETRIES,
) -> List[SpectrumPoint]:
    """Roots of F(y, ·) inside a contour from resolvent moments.

    Global moments locate the roots; each group of nearby estimates is then
    re-solved on a small circle where trapezoidal convergence is fast. When
    the local circles miss part of the argument-principle count, the global
    solve is repeated with twice the nodes and wider local circles, up to
    ``retries`` times.

    Raises:
        NodeOnSingularity: the contour meets the spectrum.
        RankDeficientProbe: the moment rank is ambiguous or saturated.
        IncompleteSpectrum: the local circles still miss roots after the retries.
    """
    r = F.dim
    ell = r if probe_rank is None else int(probe_rank)
    if ell < 1 or ell > r:
        raise ValueError(f"probe rank must be in [1, {r}], got {ell}")
    if ell == r:
        probe = np.eye(r, dtype=complex)
    else:
        rng = np.random.default_rng(seed)
        probe = rng.standard_normal((r, ell)) + 1j * rng.standard_normal((r, ell))
    total = count_in_contour(F, y, contour, rank_tol)
    if total.count == 0:
        return []
    for attempt in range(retries + 1):
        inside = _refine_locally(
            F, y, contour.with_nodes(contour.nodes * 2 ** attempt), total.count, probe, rank_tol, 2.0 ** attempt,
        )
        found = inside.size
        if found == total.count:
            break
        logger.warning(f"Local circles recovered {found} of {total.count} roots at y={y:.6f} (attempt {attempt + 1})")
    else:
        raise IncompleteSpectrum(
            f"local refinement recovered {found} of {total.count} roots",
            {"y": y, "found": found, "count": total.count, "attempts": retries + 1},
        )
    return _make_points(F, y, inside, SolverMethod.CONTOUR, match_tol, residual_tol, taylor_radius=1.0)


# =============================================================================
# TRACKING OVER Y
# =============================================================================

def _solve_at(args) -> List[SpectrumPoint]:
    F, y, strip, solver, contour, match_tol = args
    if solver == SolverMethod.CONTOUR:
        points = contour_solve(F, y, contour, match_tol=match_tol)
        return [p for p in points if strip.contains(p.sigma)]
    return companion_solve(F, y, strip, match_tol=match_tol)


def spectrum_curve(
    F: MatrixPolyFamily,
    y_grid: Sequence[float],
    strip: Strip,
    solver: str = "companion",
    contour: Optional[Contour] = None,
    match_tol: float = MATCH_TOL,
    mapper: Optional[Callable] = None,
) -> List[SpectrumCurve]:
    """Track strip spectra along the y grid.

    Per-y solves go through ``mapper`` (default: builtin map, order preserving);
    matching is a sequential nearest-neighbour pass with linear velocity
    prediction. Merges and splits of distinct roots are marked as collisions,
    and tracking restarts without prediction after them.
    """
    solver = SolverMethod(solver)
    if solver == SolverMethod.CONTOUR and contour is None:
        contour = strip.inscribed_circle()
    mapper = mapper or map
    spectra = list(mapper(_solve_at, [(F, float(y), strip, solver, contour, match_tol) for y in y_grid]))

    curves: List[SpectrumCurve] = []
    prev_slots: List[Tuple[int, int, complex, Optional[complex]]] = []  # (curve, point index, σ, velocity)
    for i, (y, points) in enumerate(zip(y_grid, spectra)):
        slots = [(k, p.sigma) for k, p in enumerate(points) for _ in range(p.algebraic)]
        assigned: List[Optional[int]] = [None] * len(slots)
        sources = {}
        if prev_slots and slots:
            pred = np.array([s + (v if v is not None else 0.0) for _, _, s, v in prev_slots])
            cur = np.array([s for _, s in slots])
            cost = np.abs(pred[:, None] - cur[None, :])
            rows, cols = linear_sum_assignment(cost)
            for a, b in zip(rows, cols):
                assigned[b] = a
                sources.setdefault(slots[b][0], set()).add(prev_slots[a][1])
                distinct = [c for c in np.argsort(cost[a]) if slots[c][0] != slots[b][0]]
                tol = match_tol * max(1.0, abs(cur[b]))
                if distinct and cost[a, distinct[0]] - cost[a, b] < tol:
                    curves[prev_slots[a][0]].ambiguities.append(float(y))
        merged = {k for k, src in sources.items() if len(src) > 1}
        split = set()
        if i > 0:
            targets = {}
            for b, a in enumerate(assigned):
                if a is not None:
                    targets.setdefault(prev_slots[a][1], set()).add(slots[b][0])
            split = {pk for pk, t in targets.items() if len(t) > 1}
        new_slots = []
        for b, (k, sigma) in enumerate(slots):
            a = assigned[b]
            if a is None:
                curve_id = len(curves)
                curves.append(SpectrumCurve(curve_id))
                velocity = None
            else:
                curve_id, _, prev_sigma, _ = prev_slots[a]
                velocity = None if (k in merged or prev_slots[a][1] in split) else sigma - prev_sigma
            curve = curves[curve_id]
            curve.samples.append((float(y), points[k]))
            if k in merged:
                curve.collisions.append(float(y))
                curve.ambiguities.append(float(y))
            new_slots.append((curve_id, k, sigma, velocity))
        if split:
            for curve_id, pk, _, _ in prev_slots:
                if pk in split and y_grid[i - 1] not in curves[curve_id].collisions:
                    curves[curve_id].collisions.append(float(y_grid[i - 1]))
                    curves[curve_id].ambiguities.append(float(y_grid[i - 1]))
        if merged or split:
            logger.warning(f"Spectral collision near y={float(y):.6f}")
            warnings.warn(f"matching ambiguous near y={float(y):.6f}", MatchingAmbiguity)
        prev_slots = new_slots
    for c in curves:
        c.collisions = sorted(set(c.collisions))
        c.ambiguities = sorted(set(c.ambiguities))
    logger.info(f"Tracked {len(curves)} spectrum curves over {len(y_grid)} grid points")
    return curves


def collision_points(curves: Iterable[SpectrumCurve]) -> List[float]:
    return sorted({y for c in curves for y in c.collisions})


# =============================================================================
# (FiniteSpecb)
# =============================================================================

def check_finite_specb(
    F: MatrixPolyFamily,
    y_grid: Sequence[float],
    strip: Strip,
    tol: float = SPECB_TOL,
) -> FiniteSpecbReport:
    """Pass iff no root lies within tol of Im σ = γ or Im σ = γ - m at any sampled y."""
    offending = []
    for y in y_grid:
        for sigma in linearization_eigenvalues(F, float(y)):
            if abs(sigma.imag - strip.gamma) < tol or abs(sigma.imag - strip.lower) < tol:
                offending.append((float(y), complex(sigma)))
    passed = not offending
    logger.info(f"FiniteSpecb {'passed' if passed else 'failed'} on {len(y_grid)} grid points")
    return FiniteSpecbReport(passed, offending)

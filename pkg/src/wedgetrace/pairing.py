# =============================================================================
# ADJOINT PAIRING
# =============================================================================
"""
Boundary pairing between trace fibers of ᵇA and of its formal adjoint.

Everything is computed in t = log x, where xD_x = -i∂_t and the weighted
space x^{-γ}L²_b carries the measure e^{2γt} dt. With ᵇA u = 0 and
ᵇA⋆ v = 0 the pairing

    [u, v] = (ᵇA ωu, ωv) - (ωu, ᵇA⋆ ωv)

only sees the commutators [P(xD_x), ω], supported where the cutoff ω
moves from 1 to 0. On that interval ω is a polynomial in x, so
(xD_x)^k ω is exact.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import legendre

from .core import LogGrid, MatrixPolyFamily, Strip, TrigPoly
from .errors import GridTooCoarse, SingularPairing
from .trace import TraceElement, TraceFrame, apply_xdx

logger = logging.getLogger(__name__)

PAIRING_NODES = 48
GRID_TOL = 1e-6
CONDITION_BOUND = 1e6


# =============================================================================
# CUTOFF
# =============================================================================

def smoothstep(order: int) -> Polynomial:
    """S_N(s) = s^{N+1} Σ_n C(N+n, n) C(2N+1, N-n) (-s)^n; C^N at 0 and 1."""
    coeffs = np.zeros(2 * order + 2)
    for n in range(order + 1):
        coeffs[order + 1 + n] = math.comb(order + n, n) * math.comb(2 * order + 1, order - n) * (-1) ** n
    return Polynomial(coeffs)


@dataclass(frozen=True)
class Cutoff:
    """ω = 1 on (0, x_a], 0 on [x_b, ∞), a smoothstep of order N in between (N=2: quintic)."""

    plateau_end: float
    support_end: float
    smoothness: int = 2

    def __post_init__(self):
        if not 0 < self.plateau_end < self.support_end:
            raise ValueError(f"cutoff needs 0 < x_a < x_b, got ({self.plateau_end}, {self.support_end})")
        if self.smoothness < 1:
            raise ValueError("cutoff smoothness must be at least 1")

    @property
    def transition(self) -> Polynomial:
        """ω restricted to [x_a, x_b] as a polynomial in x."""
        h = self.support_end - self.plateau_end
        return 1.0 - smoothstep(self.smoothness)(Polynomial([-self.plateau_end / h, 1.0 / h]))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = self.transition(np.clip(x, self.plateau_end, self.support_end))
        return np.where(x <= self.plateau_end, 1.0, np.where(x >= self.support_end, 0.0, inside))

    def xdx_power(self, k: int, x) -> np.ndarray:
        """(xD_x)^k ω; for k ≥ 1 supported in [x_a, x_b]."""
        if k == 0:
            return self(x).astype(complex)
        x = np.asarray(x, dtype=float)
        c = self.transition.coef
        n = np.arange(c.size)
        values = np.polynomial.polynomial.polyval(x, c * n.astype(float) ** k) * (-1j) ** k
        inside = (x > self.plateau_end) & (x < self.support_end)
        return np.where(inside, values, 0.0)

    def grid(self, nodes: int) -> LogGrid:
        return LogGrid.gauss_legendre(self.plateau_end, self.support_end, nodes)


def _ensure_smooth(cutoff: Cutoff, degree: int) -> Cutoff:
    if cutoff.smoothness >= degree - 1:
        return cutoff
    return Cutoff(cutoff.plateau_end, cutoff.support_end, degree - 1)


@dataclass
class PairingMatrix:
    y: float
    matrix: np.ndarray
    condition: float

    def is_invertible(self, bound: float = CONDITION_BOUND) -> bool:
        return bool(np.isfinite(self.condition) and self.condition <= bound)


def _weights(strip: Optional[Strip], F: MatrixPolyFamily):
    m = strip.order if strip is not None else F.degree
    gamma = strip.gamma if strip is not None else m / 2.0
    return m, gamma


# =============================================================================
# ADJOINT FAMILY
# =============================================================================

def adjoint_family(F: MatrixPolyFamily, order: Optional[int] = None, gamma: Optional[float] = None) -> MatrixPolyFamily:
    """Indicial family of the formal adjoint in x^{-γ}L²_b.

    P⋆(σ) = Σ_j C_j^H (σ - i(2γ - m))^j, i.e. [P(σ̄ + i(2γ - m))]^H; γ defaults to m/2.
    """
    m = F.degree if order is None else int(order)
    gamma = m / 2.0 if gamma is None else float(gamma)
    shift = 1j * (2.0 * gamma - m)
    adjoints = [c.conj_transpose() for c in F.coeffs]
    d = len(adjoints) - 1
    out = []
    for k in range(d + 1):
        acc = None
        for j in range(k, d + 1):
            term = adjoints[j] * (math.comb(j, k) * (-shift) ** (j - k))
            acc = term if acc is None else acc + term
        out.append(acc)
    return MatrixPolyFamily(tuple(out), label=f"{F.label}*" if F.label else "adjoint")


# =============================================================================
# PAIRING
# =============================================================================

def _commutator(C: np.ndarray, tau: TraceElement, cutoff: Cutoff, x: np.ndarray, order: int) -> np.ndarray:
    """x^{-m}[P(xD_x), ω]τ = x^{-m} Σ_j C_j Σ_{k≥1} C(j,k) (xD_x)^k ω · (xD_x)^{j-k} τ."""
    d = C.shape[0] - 1
    powers = [apply_xdx(tau, k)(x) for k in range(d)]
    bumps = [cutoff.xdx_power(k, x) for k in range(d + 1)]
    out = np.zeros((x.size, tau.dim), dtype=complex)
    for j in range(1, d + 1):
        for k in range(1, j + 1):
            out += math.comb(j, k) * bumps[k][:, None] * (powers[j - k] @ C[j].T)
    return out * (x ** (-order))[:, None]


def _pairing_integrand(C, Cstar, u, v, cutoff, grid: LogGrid, order: int, gamma: float) -> np.ndarray:
    x = grid.x
    omega = cutoff(x)[:, None]
    left = np.einsum("na,na->n", np.conj(omega * v(x)), _commutator(C, u, cutoff, x, order))
    right = np.einsum("na,na->n", np.conj(_commutator(Cstar, v, cutoff, x, order)), omega * u(x))
    return (left - right) * x ** (2.0 * gamma)


def flat_pairing(
    F: MatrixPolyFamily,
    y: float,
    u: TraceElement,
    v: TraceElement,
    cutoff: Cutoff,
    strip: Optional[Strip] = None,
    nodes: int = PAIRING_NODES,
    grid_tol: float = GRID_TOL,
) -> complex:
    """[u, v]^♭_y by Gauss-Legendre quadrature in log x over the cutoff transition.

    Raises:
        GridTooCoarse: doubling the node count moves the value by more than
            grid_tol relative to ∫|integrand|.
    """
    m, gamma = _weights(strip, F)
    cutoff = _ensure_smooth(cutoff, F.degree)
    C = F.coefficients(y)
    Cstar = adjoint_family(F, m, gamma).coefficients(y)
    values = []
    for n in (nodes, 2 * nodes):
        grid = cutoff.grid(n)
        integrand = _pairing_integrand(C, Cstar, u, v, cutoff, grid, m, gamma)
        values.append((complex(np.sum(grid.weights * integrand)), float(np.sum(grid.weights * np.abs(integrand)))))
    (coarse, _), (fine, size) = values
    if abs(fine - coarse) > grid_tol * max(size, 1e-300):
        raise GridTooCoarse(
            f"pairing moved by {abs(fine - coarse):.3e} on refinement",
            {"y": y, "nodes": nodes, "scale": size},
        )
    return fine


def pairing_matrix(
    F: MatrixPolyFamily,
    y: float,
    basis: Sequence[TraceElement],
    adjoint_basis: Sequence[TraceElement],
    cutoff: Cutoff,
    strip: Optional[Strip] = None,
    nodes: int = PAIRING_NODES,
) -> PairingMatrix:
    """G_{jℓ} = [τ_j, τ⋆_ℓ]^♭_y and its condition number."""
    G = np.array([[flat_pairing(F, y, u, v, cutoff, strip, nodes) for v in adjoint_basis] for u in basis],
                 dtype=complex).reshape(len(basis), len(adjoint_basis))
    cond = float(np.linalg.cond(G)) if G.size and G.shape[0] == G.shape[1] else np.inf
    return PairingMatrix(float(y), G, cond)


def cutoff_independence(
    F: MatrixPolyFamily,
    y: float,
    basis: Sequence[TraceElement],
    adjoint_basis: Sequence[TraceElement],
    first: Cutoff,
    second: Cutoff,
    strip: Optional[Strip] = None,
    nodes: int = PAIRING_NODES,
) -> float:
    """max |G(ω₁) - G(ω₂)| relative to the largest entry of G(ω₁)."""
    G1 = pairing_matrix(F, y, basis, adjoint_basis, first, strip, nodes).matrix
    G2 = pairing_matrix(F, y, basis, adjoint_basis, second, strip, nodes).matrix
    scale = max(float(np.max(np.abs(G1))), 1e-300)
    return float(np.max(np.abs(G1 - G2))) / scale


# =============================================================================
# TRANSITION FUNCTIONS
# =============================================================================

@dataclass
class TransitionReport:
    """a(y) with τ'_j = Σ_k a_{kj} τ_k, and its second finite differences."""

    y_grid: List[float]
    coefficients: np.ndarray
    second_differences: np.ndarray
    max_second_difference: float
    median_second_difference: float
    max_condition: float


def transition_smoothness(
    F: MatrixPolyFamily,
    frame_a: TraceFrame,
    frame_b: TraceFrame,
    adjoint_frame: TraceFrame,
    cutoff: Cutoff,
    strip: Optional[Strip] = None,
    nodes: int = PAIRING_NODES,
    condition_bound: float = CONDITION_BOUND,
    mapper: Optional[Callable] = None,
) -> TransitionReport:
    """Solve [τ'_j, τ⋆_ℓ] = Σ_k a_{kj} [τ_k, τ⋆_ℓ] per y, i.e. a = (G_B G_A^{-1})^T.

    Raises:
        SingularPairing: G_A exceeds the condition bound at a grid point.
    """
    if not (frame_a.y_grid == frame_b.y_grid == adjoint_frame.y_grid):
        raise ValueError("frames must share one y grid")
    mapper = mapper or map

    def solve_at(i: int):
        y = frame_a.y_grid[i]
        GA = pairing_matrix(F, y, frame_a.elements[i], adjoint_frame.elements[i], cutoff, strip, nodes)
        GB = pairing_matrix(F, y, frame_b.elements[i], adjoint_frame.elements[i], cutoff, strip, nodes)
        if not GA.is_invertible(condition_bound):
            raise SingularPairing(
                f"pairing matrix condition {GA.condition:.3e} at y={y:.6f}",
                {"y": y, "condition": GA.condition},
            )
        return np.linalg.solve(GA.matrix.T, GB.matrix.T), GA.condition

    results = list(mapper(solve_at, range(len(frame_a.y_grid))))
    a = np.stack([r[0] for r in results])
    second = a[2:] - 2.0 * a[1:-1] + a[:-2] if a.shape[0] >= 3 else np.zeros((0,) + a.shape[1:])
    magnitudes = np.max(np.abs(second), axis=(1, 2)) if second.size else np.zeros(0)
    report = TransitionReport(
        list(frame_a.y_grid), a, second,
        float(np.max(magnitudes)) if magnitudes.size else 0.0,
        float(np.median(magnitudes)) if magnitudes.size else 0.0,
        float(max(r[1] for r in results)),
    )
    logger.info(f"Transition coefficients: max second difference {report.max_second_difference:.3e}")
    return report


# =============================================================================
# INTERIOR ADJOINT ORACLE
# =============================================================================

def _bump_functions(dim: int, degree: int, rng: np.random.Generator, center: float, half_width: float):
    """Components q_a(t)·(1 - ((t-c)/h)²)^K with K = degree + 1."""
    K = degree + 1
    base = Polynomial([1.0, 0.0, -1.0 / half_width ** 2])(Polynomial([-center, 1.0])) ** K
    comps = []
    for _ in range(dim):
        q = Polynomial(rng.standard_normal(3) + 1j * rng.standard_normal(3))
        comps.append(q * base)
    return comps


def _apply_in_t(C: np.ndarray, comps: List[Polynomial], t: np.ndarray, order: int) -> np.ndarray:
    """e^{-mt} Σ_j C_j (-i∂_t)^j φ at the nodes."""
    derivs = [np.stack([(p.deriv(j) if j else p)(t) for p in comps], axis=-1) * (-1j) ** j for j in range(C.shape[0])]
    out = sum(derivs[j] @ C[j].T for j in range(C.shape[0]))
    return out * np.exp(-order * t)[:, None]


def adjoint_defect(
    F: MatrixPolyFamily,
    y: float,
    strip: Optional[Strip] = None,
    seed: int = 0,
    center: float = 0.0,
    half_width: float = 1.0,
    nodes: int = 96,
) -> float:
    """|(ᵇAφ, ψ) - (φ, ᵇA⋆ψ)| for random compactly supported polynomial bumps φ, ψ."""
    m, gamma = _weights(strip, F)
    rng = np.random.default_rng(seed)
    phi = _bump_functions(F.dim, F.degree, rng, center, half_width)
    psi = _bump_functions(F.dim, F.degree, rng, center, half_width)
    s, w = legendre.leggauss(nodes)
    t = center + half_width * s
    w = half_width * w * np.exp(2.0 * gamma * t)
    C = F.coefficients(y)
    Cstar = adjoint_family(F, m, gamma).coefficients(y)
    phi_t = np.stack([p(t) for p in phi], axis=-1)
    psi_t = np.stack([p(t) for p in psi], axis=-1)
    lhs = np.sum(w * np.einsum("na,na->n", np.conj(psi_t), _apply_in_t(C, phi, t, m)))
    rhs = np.sum(w * np.einsum("na,na->n", np.conj(_apply_in_t(Cstar, psi, t, m)), phi_t))
    return float(abs(lhs - rhs))

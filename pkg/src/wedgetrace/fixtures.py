# =============================================================================
# FIXTURES
# =============================================================================
"""
Ground-truth example families with closed-form answers.

    - line-bundle example: 2×2 blocks [[σ² + λ_k²φ₁₁, φ₁₂], [φ₂₁, σ² + λ_k²φ₂₂]]
      per fiber mode, in a fixed local frame;
    - classical operators: ᵇP̂_y(σ) = a_{m0}(0, y)·Π_{j<m}(σ + ij);
    - disk witness: H²_𝒯 versus H² Rayleigh ratios on polynomial harmonics.

Fixtures are registered by name for the CLI.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial import Polynomial

from .core import MatrixPolyFamily, Strip, TrigPoly, sort_key
from .errors import BranchAmbiguity, GramConditioning
from .trace import PolePart, SingularPart, TraceElement, TraceTerm
from .varorder import EndomorphismField
from .wedge import CoefficientTable, FiberKind, WedgeOperatorSpec, fiber_basis

logger = logging.getLogger(__name__)

BRANCH_SAMPLES = 256
GRAM_CONDITION_LIMIT = 1e12
COLLISION_TOL = 1e-12


# =============================================================================
# LINE-BUNDLE EXAMPLE
# =============================================================================

@dataclass(frozen=True, eq=False)
class LineBundleExample:
    """φ_ij(y) on Y, fiber eigenvalues λ_k of Q_Z = Δ_Z + c, weight γ (order 2)."""

    phi11: TrigPoly
    phi12: TrigPoly
    phi21: TrigPoly
    phi22: TrigPoly
    eigenvalues: Tuple[float, ...]
    gamma: float = 1.0
    label: str = "linebundle"

    def __post_init__(self):
        lam = tuple(float(v) for v in self.eigenvalues)
        if not lam:
            raise ValueError("line-bundle example needs at least one fiber eigenvalue")
        if lam[0] <= 0.0:
            raise ValueError("λ₀ must be positive (c > 0)")
        if any(b < a for a, b in zip(lam, lam[1:])):
            raise ValueError("fiber eigenvalues must be nondecreasing")
        for name in ("phi11", "phi12", "phi21", "phi22"):
            if getattr(self, name).shape != ():
                raise ValueError(f"{name} must be a scalar trigonometric polynomial")
        object.__setattr__(self, "eigenvalues", lam)

    @classmethod
    def on_circle(cls, phi11, phi12, phi21, phi22, modes: int, c: float, gamma: float = 1.0,
                  label: str = "linebundle") -> "LineBundleExample":
        """Eigenvalues taken from the Fourier circle fiber, λ_n² = n² + c."""
        basis = fiber_basis("circle", modes, c)
        return cls(phi11, phi12, phi21, phi22, tuple(basis.eigenvalues), gamma, label)

    @property
    def modes(self) -> int:
        return len(self.eigenvalues)

    @property
    def strip(self) -> Strip:
        return Strip(self.gamma, 2)

    @property
    def upper_triangular(self) -> bool:
        return not np.any(self.phi21.coeffs)

    def in_validated_regime(self, samples: int = 1024) -> bool:
        """φ₂₁ = 0 and 1/λ₁² < sup|φ_jj| < 1/λ₀²."""
        top = max(np.max(np.abs(self.phi11.sample(samples))), np.max(np.abs(self.phi22.sample(samples))))
        upper = top < 1.0 / self.eigenvalues[0] ** 2
        lower = self.modes < 2 or top > 1.0 / self.eigenvalues[1] ** 2
        return self.upper_triangular and upper and lower


def generic_line_bundle() -> LineBundleExample:
    """λ = (1, 2), φ₁₁ = 0.49 + 0.05 sin y, φ₂₂ = 0.81, φ₁₂ = 0.3, φ₂₁ = 0."""
    return LineBundleExample(
        TrigPoly.scalar(0.49, sin=[0.05]), TrigPoly.constant(0.3),
        TrigPoly.constant(0.0), TrigPoly.constant(0.81),
        (1.0, 2.0), 1.0, "linebundle-generic",
    )


def crossing_line_bundle() -> LineBundleExample:
    """φ₁₁ = 0.5 + 0.2 sin y and φ₂₂ = 0.5 - 0.2 sin y meet at y = 0, π; φ₁₂ ≡ -1."""
    return LineBundleExample(
        TrigPoly.scalar(0.5, sin=[0.2]), TrigPoly.constant(-1.0),
        TrigPoly.constant(0.0), TrigPoly.scalar(0.5, sin=[-0.2]),
        (1.0, 2.0), 1.0, "linebundle-crossing",
    )


def line_bundle_family(ex: LineBundleExample) -> MatrixPolyFamily:
    """Block diagonal over modes k < K of [[σ² + λ_k²φ₁₁, φ₁₂], [φ₂₁, σ² + λ_k²φ₂₂]]."""
    blocks = [
        TrigPoly.matrix([[ex.phi11 * lam ** 2, ex.phi12], [ex.phi21, ex.phi22 * lam ** 2]])
        for lam in ex.eigenvalues
    ]
    dim = 2 * ex.modes
    constant = TrigPoly.block_diag(blocks).trimmed()
    zero = TrigPoly.constant(np.zeros((dim, dim)))
    return MatrixPolyFamily((constant, zero, TrigPoly.constant(np.eye(dim))), label=ex.label)


def line_bundle_operator(ex: LineBundleExample) -> WedgeOperatorSpec:
    """Wedge operator with the Fourier circle as fiber and c = λ₀².

    x²A = (xD_x)² + (xD_y)² + diag(φ₁₁, φ₂₂)D_z² + [[cφ₁₁, φ₁₂], [φ₂₁, cφ₂₂]].
    """
    c = ex.eigenvalues[0] ** 2
    diag = TrigPoly.matrix([[ex.phi11, 0.0], [0.0, ex.phi22]])
    zeroth = TrigPoly.matrix([[ex.phi11 * c, ex.phi12], [ex.phi21, ex.phi22 * c]])
    coefficients = {
        (2, 0, 0): CoefficientTable.constant(np.eye(2)),
        (0, 2, 0): CoefficientTable.constant(np.eye(2)),
        (0, 0, 2): CoefficientTable.from_y(diag),
        (0, 0, 0): CoefficientTable.from_y(zeroth),
    }
    return WedgeOperatorSpec(2, 2, 2, coefficients, ex.gamma, FiberKind.CIRCLE, ex.label)


def _continuous_sqrt(phi: TrigPoly, y: float) -> complex:
    """√φ(y), continued along [0, y] from the principal branch at 0.

    Raises:
        BranchAmbiguity: φ vanishes or winds around 0 on Y.
    """
    if phi.min_abs() < 1e-12 or phi.winding_number() != 0:
        raise BranchAmbiguity("coefficient vanishes or winds around 0; no continuous square root",
                              {"winding": phi.winding_number(), "min_abs": phi.min_abs()})
    values = np.asarray(phi(np.linspace(0.0, float(y), BRANCH_SAMPLES + 1)), dtype=complex)
    root = np.sqrt(values[0])
    for v in values[1:]:
        cand = np.sqrt(v)
        root = cand if abs(cand - root) <= abs(cand + root) else -cand
    return complex(root)


def closed_form_spectrum(ex: LineBundleExample, y: float, strip: Optional[Strip] = None) -> List[complex]:
    """±iλ_k√φ_jj(y) inside the strip, sorted by (-Im, Re).

    Raises:
        BranchAmbiguity: some φ_jj vanishes or winds around 0.
    """
    if not ex.upper_triangular:
        raise ValueError("closed form needs φ₂₁ ≡ 0")
    strip = strip or ex.strip
    roots = []
    for phi in (ex.phi11, ex.phi22):
        r = _continuous_sqrt(phi, y)
        for lam in ex.eigenvalues:
            roots.extend([1j * lam * r, -1j * lam * r])
    return sorted((s for s in roots if strip.contains(s)), key=sort_key)


def collision_frame_reference(ex: LineBundleExample, y0: float, form: str = "printed") -> List[SingularPart]:
    """χ⁺₁, χ⁺₂, χ⁻₁, χ⁻₂ at a collision φ₁₁(y₀) = φ₂₂(y₀), embedded in mode 0.

    ``form="printed"`` gives the closed forms with e₂ weight 2σ in χ₂;
    ``form="oracle"`` gives the exact principal parts of M(σ, y₀)^{-1}e_j,
    whose e₂ weight is -2σ/φ₁₂. The two agree when φ₁₂(y₀) = -1.
    """
    if form not in ("printed", "oracle"):
        raise ValueError(f"unknown form {form!r}")
    if not ex.upper_triangular:
        raise ValueError("collision reference needs φ₂₁ ≡ 0")
    p11, p22 = complex(ex.phi11(y0)), complex(ex.phi22(y0))
    if abs(p11 - p22) > COLLISION_TOL:
        raise ValueError(f"no collision at y0={y0}: φ₁₁ - φ₂₂ = {p11 - p22:.3e}")
    phi12 = complex(ex.phi12(y0))
    lam0 = ex.eigenvalues[0]
    dim = 2 * ex.modes
    e1, e2 = np.eye(dim, dtype=complex)[0], np.eye(dim, dtype=complex)[1]
    parts = []
    for sign in (1.0, -1.0):
        s = sign * 1j * lam0 * _continuous_sqrt(ex.phi11, y0)
        chi1 = PolePart(s, (e1 / (2.0 * s))[None])
        if form == "printed":
            residue = -e1 / s + 2.0 * s * e2
            chi2 = PolePart(s, np.stack([residue, e1]))
        else:
            prefactor = -phi12 / (4.0 * s ** 2)
            residue = prefactor * (-e1 / s - (2.0 * s / phi12) * e2)
            chi2 = PolePart(s, np.stack([residue, prefactor * e1]))
        parts.extend([SingularPart(dim, (chi1,)), SingularPart(dim, (chi2,))])
    return parts


def crossing_field() -> EndomorphismField:
    """a(y) = [[0.5 + 0.2 sin y, 1], [0, 0.5 - 0.2 sin y]]; eigenvalues meet at y = 0, π."""
    return EndomorphismField.from_entries(
        [[TrigPoly.scalar(0.5, sin=[0.2]), 1.0], [0.0, TrigPoly.scalar(0.5, sin=[-0.2])]],
        label="crossing",
    )


# =============================================================================
# CLASSICAL OPERATORS
# =============================================================================

def falling_polynomial(k: int) -> Polynomial:
    """p_k(σ) = Π_{j<k}(σ + ij), with x^k D_x^k = p_k(xD_x)."""
    return Polynomial.fromroots([-1j * j for j in range(k)]) if k else Polynomial([1.0])


@dataclass(frozen=True, eq=False)
class ClassicalExample:
    """A = Σ_{k+α≤m} a_{kα}(y) D_x^k D_y^α on ℂ^r, leading a_{m0} invertible."""

    order: int
    rank: int
    leading: TrigPoly
    terms: Dict[Tuple[int, int], TrigPoly] = field(default_factory=dict)
    gamma: float = 0.5
    label: str = "classical"

    def __post_init__(self):
        if self.order < 1 or self.rank < 1:
            raise ValueError("classical example needs order ≥ 1 and rank ≥ 1")
        if self.leading.shape != (self.rank, self.rank):
            raise ValueError(f"leading coefficient must be {self.rank}×{self.rank}")
        for (k, a), poly in self.terms.items():
            if k < 0 or a < 0 or k + a > self.order or (k, a) == (self.order, 0):
                raise ValueError(f"term {(k, a)} not allowed beside the leading coefficient")
            if poly.shape != (self.rank, self.rank):
                raise ValueError(f"term {(k, a)} must be {self.rank}×{self.rank}")
        samples = self.leading.sample(256)
        if min(np.linalg.svd(m, compute_uv=False)[-1] for m in samples) < 1e-12:
            raise ValueError("leading coefficient a_{m0}(0, y) must be invertible on Y")

    @property
    def strip(self) -> Strip:
        return Strip(self.gamma, self.order)


def classical_example(order: int, rank: int = 1, gamma: float = 0.5,
                      terms: Optional[Dict[Tuple[int, int], TrigPoly]] = None) -> ClassicalExample:
    """Identity leading coefficient; default tangential part i D_y (m=1) or D_y^m (m≥2)."""
    eye = np.eye(rank)
    if terms is None:
        terms = {(0, 1): TrigPoly.constant(1j * eye)} if order == 1 else {(0, order): TrigPoly.constant(eye)}
    return ClassicalExample(order, rank, TrigPoly.constant(eye), dict(terms), gamma, f"classical-m{order}")


def classical_family(ex: ClassicalExample) -> MatrixPolyFamily:
    """a_{m0}(0, y)·p_m(σ)."""
    return MatrixPolyFamily.from_factor(ex.leading, falling_polynomial(ex.order).coef, label=ex.label)


def classical_operator(ex: ClassicalExample) -> WedgeOperatorSpec:
    """Spec of x^m A on a point fiber, x^m D_x^k D_y^α = x^{m-k-α} p_k(xD_x)(xD_y)^α."""
    m = ex.order
    layers: Dict[Tuple[int, int, int], Dict[int, TrigPoly]] = {}
    for (k, a), poly in [((m, 0), ex.leading)] + list(ex.terms.items()):
        x_power = m - k - a
        for j, c in enumerate(falling_polynomial(k).coef):
            if c == 0:
                continue
            slot = layers.setdefault((j, a, 0), {})
            slot[x_power] = slot[x_power] + poly * c if x_power in slot else poly * c
    coefficients = {}
    for idx, by_power in layers.items():
        degree = max(p.degree for p in by_power.values())
        coefficients[idx] = CoefficientTable({p: poly.padded(degree).coeffs[:, None] for p, poly in by_power.items()})
    return WedgeOperatorSpec(m, ex.rank, ex.rank, coefficients, ex.gamma, FiberKind.POINT, ex.label)


def classical_taylor_trace(jets: Sequence[np.ndarray]) -> TraceElement:
    """γ_A(u) = Σ_{ℓ<m} (i^ℓ/ℓ!) γ_ℓ x^ℓ from the boundary jets γ_ℓ = D_x^ℓ u|_{x=0}."""
    jets = [np.atleast_1d(np.asarray(g, dtype=complex)) for g in jets]
    if not jets:
        raise ValueError("at least one boundary jet is required")
    dim = jets[0].size
    terms = tuple(
        TraceTerm(-1j * ell, 0, (1j ** ell / math.factorial(ell)) * g)
        for ell, g in enumerate(jets) if np.any(g)
    )
    return TraceElement(dim, terms)


# =============================================================================
# DISK WITNESS
# =============================================================================

Poly2 = Dict[Tuple[int, int], complex]


def _d(f: Poly2) -> Poly2:
    return {(p - 1, q): p * c for (p, q), c in f.items() if p > 0}


def _dbar(f: Poly2) -> Poly2:
    return {(p, q - 1): q * c for (p, q), c in f.items() if q > 0}


def _inner(f: Poly2, g: Poly2) -> complex:
    """∫_{|z|<1} f ḡ dA with ∫ z^a z̄^b conj(z^c z̄^d) = 2π/(a+b+c+d+2) when a-b = c-d."""
    total = 0.0 + 0.0j
    for (a, b), cf in f.items():
        for (c, d), cg in g.items():
            if a - b == c - d:
                total += cf * np.conj(cg) * 2.0 * np.pi / (a + b + c + d + 2)
    return total


def _scaled(f: Poly2, factor: complex) -> Poly2:
    return {k: factor * c for k, c in f.items()}


def _h2_form(f: Poly2, g: Poly2) -> complex:
    """H² inner product: u, 2(|∂u|² + |∂̄u|²), 4(|∂²u|² + 2|∂∂̄u|² + |∂̄²u|²)."""
    first = _inner(_d(f), _d(g)) + _inner(_dbar(f), _dbar(g))
    second = (_inner(_d(_d(f)), _d(_d(g))) + 2.0 * _inner(_d(_dbar(f)), _d(_dbar(g)))
              + _inner(_dbar(_dbar(f)), _dbar(_dbar(g))))
    return _inner(f, g) + 2.0 * first + 4.0 * second


def _laplacian(f: Poly2) -> Poly2:
    return _scaled(_d(_dbar(f)), 4.0)


def _boundary(f: Poly2) -> Tuple[complex, complex]:
    """(γ₀, γ₁ = ∂_r) Fourier coefficients on |z| = 1 of a single-mode polynomial."""
    return sum(f.values()), sum((p + q) * c for (p, q), c in f.items())


def _trace_form(f: Poly2, g: Poly2, n: int) -> complex:
    """‖u‖² + ‖Δu‖² + ‖γ₀u‖²_{H^{3/2}} + ‖γ₁u‖²_{H^{1/2}} (sesquilinear)."""
    f0, f1 = _boundary(f)
    g0, g1 = _boundary(g)
    weight = 1.0 + n ** 2
    boundary = 2.0 * np.pi * (weight ** 1.5 * f0 * np.conj(g0) + weight ** 0.5 * f1 * np.conj(g1))
    return _inner(f, g) + _inner(_laplacian(f), _laplacian(g)) + boundary


def _mode_basis(n: int) -> List[Poly2]:
    """r^{|n|}e^{inθ} and r^{|n|+2}e^{inθ} as polynomials in z, z̄."""
    if n >= 0:
        return [{(n, 0): 1.0}, {(n + 1, 1): 1.0}]
    return [{(0, -n): 1.0}, {(1, 1 - n): 1.0}]


@dataclass
class DiskWitnessReport:
    modes: int
    upper: float
    lower: float
    per_mode: List[Tuple[int, float, float]]

    @property
    def bracket_ratio(self) -> float:
        return self.upper / self.lower


def disk_norm_witness(modes: int) -> DiskWitnessReport:
    """Extreme Rayleigh ratios ‖u‖²_{H²_𝒯}/‖u‖²_{H²} on span{r^{|n|}e^{inθ}, r^{|n|+2}e^{inθ}: |n| ≤ N}.

    Modes are orthogonal for both forms, so each n gives a 2×2 generalized
    eigenproblem, solved after L²-orthogonalizing and B-normalizing the pair.

    Raises:
        GramConditioning: the H² Gram matrix of a mode exceeds condition 1e12.
    """
    if modes < 2:
        raise ValueError("disk witness needs N ≥ 2")
    per_mode = []
    for n in range(-modes, modes + 1):
        f0, f1 = _mode_basis(n)
        proj = _inner(f1, f0) / _inner(f0, f0)
        f1 = {**f1, **{k: f1.get(k, 0.0) - proj * c for k, c in f0.items()}}
        basis = [f0, f1]
        A = np.array([[_trace_form(f, g, n) for g in basis] for f in basis], dtype=complex)
        B = np.array([[_h2_form(f, g) for g in basis] for f in basis], dtype=complex)
        scale = 1.0 / np.sqrt(np.real(np.diag(B)))
        A, B = A * np.outer(scale, scale), B * np.outer(scale, scale)
        cond = float(np.linalg.cond(B))
        if cond > GRAM_CONDITION_LIMIT:
            raise GramConditioning(f"H² Gram condition {cond:.3e} at mode {n}", {"mode": n, "condition": cond})
        values = scipy.linalg.eigh(A, B, eigvals_only=True)
        per_mode.append((n, float(values[0]), float(values[-1])))
    report = DiskWitnessReport(modes, max(v[2] for v in per_mode), min(v[1] for v in per_mode), per_mode)
    logger.info(f"Disk witness N={modes}: bracket [{report.lower:.4f}, {report.upper:.4f}]")
    return report


def disk_graph_ratios(n_max: int) -> np.ndarray:
    """‖z^n‖_{H²}/‖z^n‖_Δ for n = 0..n_max; harmonics make the graph norm the L² norm."""
    out = []
    for n in range(n_max + 1):
        f = {(n, 0): 1.0}
        graph = _inner(f, f) + _inner(_laplacian(f), _laplacian(f))
        out.append(np.sqrt(np.real(_h2_form(f, f)) / np.real(graph)))
    return np.asarray(out)


# =============================================================================
# REGISTRY
# =============================================================================

@dataclass
class Fixture:
    name: str
    description: str
    example: object
    family: Optional[MatrixPolyFamily] = None
    strip: Optional[Strip] = None
    order_field: Optional[EndomorphismField] = None


def _line_bundle_fixture(name: str, build: Callable[[], LineBundleExample], description: str,
                         order_field: Optional[EndomorphismField] = None) -> Fixture:
    ex = build()
    return Fixture(name, description, ex, line_bundle_family(ex), ex.strip, order_field)


def _classical_fixture(order: int) -> Fixture:
    ex = classical_example(order)
    return Fixture(ex.label, f"classical order-{order} operator, roots 0, -i, ..., -(m-1)i",
                   ex, classical_family(ex), ex.strip)


FIXTURES: Dict[str, Callable[[], Fixture]] = {
    "classical-m1": lambda: _classical_fixture(1),
    "classical-m2": lambda: _classical_fixture(2),
    "linebundle-generic": lambda: _line_bundle_fixture(
        "linebundle-generic", generic_line_bundle, "line-bundle example with simple boundary spectrum"),
    "linebundle-crossing": lambda: _line_bundle_fixture(
        "linebundle-crossing", crossing_line_bundle, "line-bundle example with collisions at y = 0, π",
        crossing_field()),
    "disk-witness": lambda: Fixture("disk-witness", "H²_𝒯 versus H² on the unit disk", None),
}


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None

import numpy as np
import pytest

from src.wedgetrace import trace
from src.wedgetrace.core import LogGrid
from src.wedgetrace.errors import NotInvariant, PoleSeparationFailure
from src.wedgetrace.fixtures import get_fixture
from src.wedgetrace.trace import (
    FrameProvenance,
    TraceElement,
    TraceTerm,
    apply_indicial,
    apply_xdx,
    assembled_frame,
    coefficient_matrix,
    dilate_trace_element,
    frame_continuation,
    mellin_quadrature,
    singular_part,
    strip_region,
    to_singular_part,
    to_trace_element,
    trace_fiber_basis,
    xdx_endomorphism,
)


def _element(sigma, ell, coeff=1.0):
    return TraceElement(1, (TraceTerm(complex(sigma), ell, np.array([coeff], dtype=complex)),))


def _grid(n):
    return 2.0 * np.pi * np.arange(n) / n


# =============================================================================
# SINGULAR PARTS
# =============================================================================

def test_singular_part_partial_fractions():
    # 1/(σ(σ+i)) = -i/σ + i/(σ+i)
    fixture = get_fixture("classical-m2")
    region = strip_region(fixture.strip, [0.0, -1j])
    sp = singular_part(fixture.family, 0.0, region, np.array([[1.0]]), fixture.strip)
    assert [p.order for p in sp.parts] == [1, 1]
    assert sp.parts[0].sigma == pytest.approx(0.0, abs=1e-9)
    assert sp.parts[1].sigma == pytest.approx(-1j, abs=1e-9)
    assert sp.parts[0].coeffs[0, 0] == pytest.approx(-1j, abs=1e-10)
    assert sp.parts[1].coeffs[0, 0] == pytest.approx(1j, abs=1e-10)


def test_trace_element_is_inverse_mellin():
    fixture = get_fixture("classical-m2")
    region = strip_region(fixture.strip, [0.0, -1j])
    tau = to_trace_element(singular_part(fixture.family, 0.0, region, np.array([[1.0]]), fixture.strip))
    x = np.array([0.3, 1.0, 2.5])
    assert np.allclose(tau(x)[:, 0], x - 1.0, atol=1e-10)
    assert apply_indicial(fixture.family, 0.0, tau).norm() < 1e-10
    back = to_singular_part(tau)
    assert back.parts[1].coeffs[0, 0] == pytest.approx(1j, abs=1e-10)


def test_singular_part_rejects_wrong_rhs_dimension():
    fixture = get_fixture("classical-m1")
    region = strip_region(fixture.strip)
    with pytest.raises(ValueError):
        singular_part(fixture.family, 0.0, region, np.ones((1, 2)), fixture.strip)


def test_singular_part_inseparable_poles():
    fixture = get_fixture("classical-m1")
    region = strip_region(fixture.strip)
    with pytest.raises(PoleSeparationFailure):
        singular_part(fixture.family, 0.0, region, np.array([[1.0]]), fixture.strip,
                      poles=[(0.0, 1), (1e-7, 1)])


def test_supplied_poles_skip_location(monkeypatch):
    def fail(*args, **kwargs):
        raise AssertionError("poles were located")

    monkeypatch.setattr(trace, "locate_poles", fail)
    fixture = get_fixture("classical-m2")
    sp = singular_part(fixture.family, 0.0, strip_region(fixture.strip, [0.0, -1j]), np.array([[1.0]]),
                       fixture.strip, solver="contour", poles=[(0.0, 1), (-1j, 1)])
    assert sp.parts[0].coeffs[0, 0] == pytest.approx(-1j, abs=1e-10)
    assert sp.parts[1].coeffs[0, 0] == pytest.approx(1j, abs=1e-10)


def _times_family(F, y, q):
    """Coefficients of σ ↦ F(y, σ) q(σ), lowest power first."""
    C = F.coefficients(y)
    out = np.zeros((C.shape[0] + q.shape[0] - 1, F.dim), dtype=complex)
    for j in range(C.shape[0]):
        for i in range(q.shape[0]):
            out[i + j] += C[j] @ q[i]
    return out


def test_singular_part_ignores_polynomial_representative():
    fixture = get_fixture("linebundle-generic")
    rng = np.random.default_rng(3)
    rhs = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    q = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    shifted = _times_family(fixture.family, 0.4, q)
    shifted[:2] += rhs
    region = fixture.strip.inscribed_circle()
    a = singular_part(fixture.family, 0.4, region, rhs, fixture.strip)
    b = singular_part(fixture.family, 0.4, region, shifted, fixture.strip)
    assert len(a.parts) == len(b.parts) == 4
    scale = max(float(np.max(np.abs(p.coeffs))) for p in a.parts)
    for pa, pb in zip(a.parts, b.parts):
        assert pa.sigma == pytest.approx(pb.sigma)
        assert np.allclose(pa.coeffs, pb.coeffs, atol=1e-9 * scale)


# =============================================================================
# OPERATIONS ON TRACE ELEMENTS
# =============================================================================

def test_apply_xdx_matches_finite_difference():
    tau = _element(0.3 - 0.2j, 2, 1.5 - 0.5j)
    x = np.array([0.4, 1.3, 3.0])
    h = 1e-6 * x
    derivative = (tau(x + h) - tau(x - h))[:, 0] / (2.0 * h)
    assert np.allclose(apply_xdx(tau)(x)[:, 0], -1j * x * derivative, rtol=1e-6)


def test_dilation_matches_definition():
    tau = _element(0.7 + 0.1j, 1) + _element(-0.2j, 0, 2.0)
    x = np.array([0.5, 1.0, 1.7])
    dilated = dilate_trace_element(tau, 2.0, 0.5)
    assert np.allclose(dilated(x), np.sqrt(2.0) * tau(2.0 * x), atol=1e-12)
    with pytest.raises(ValueError):
        dilate_trace_element(tau, 0.0, 0.5)


def test_mellin_quadrature_of_power():
    grid = LogGrid.gauss_legendre(0.5, 2.0, 32)
    values = grid.x ** (1j * 0.7)
    assert mellin_quadrature(values, grid, 0.7) == pytest.approx(np.log(4.0), abs=1e-12)
    a, b = np.log(0.5), np.log(2.0)
    expected = (np.exp(-0.5j * b) - np.exp(-0.5j * a)) / (-0.5j)
    assert mellin_quadrature(values, grid, 1.2) == pytest.approx(expected, abs=1e-12)


def test_xdx_endomorphism_on_log_chain():
    sigma = 0.5
    basis = [_element(sigma, 1), _element(sigma, 0)]
    X = xdx_endomorphism(basis)
    assert np.allclose(X, [[1j * sigma, 0.0], [1.0, 1j * sigma]], atol=1e-12)


def test_xdx_endomorphism_not_invariant():
    with pytest.raises(NotInvariant):
        xdx_endomorphism([_element(0.5, 1)])


def test_xdx_endomorphism_dependent_basis():
    with pytest.raises(ValueError):
        xdx_endomorphism([_element(0.5, 0), _element(0.5, 0, 2.0)])


# =============================================================================
# KERNEL BASES
# =============================================================================

def test_classical_basis_is_polynomial():
    fixture = get_fixture("classical-m2")
    basis = trace_fiber_basis(fixture.family, 0.0, fixture.strip)
    assert len(basis) == 2
    assert [t.sigma for t in basis[0].terms] == pytest.approx([0.0], abs=1e-9)
    assert [t.sigma for t in basis[1].terms] == pytest.approx([-1j], abs=1e-9)
    assert all(tau.max_log_power == 0 for tau in basis)
    assert all(tau.norm() == pytest.approx(1.0) for tau in basis)
    eigenvalues = np.sort_complex(np.linalg.eigvals(xdx_endomorphism(basis)))
    assert np.allclose(eigenvalues, [0.0, 1.0], atol=1e-8)


def test_collision_basis_carries_logarithms():
    fixture = get_fixture("linebundle-crossing")
    basis = trace_fiber_basis(fixture.family, 0.0, fixture.strip)
    assert len(basis) == 4
    assert [tau.max_log_power for tau in basis] == [0, 1, 0, 1]
    for tau in basis:
        assert apply_indicial(fixture.family, 0.0, tau).norm() < 1e-8
    eigenvalues = np.sort_complex(np.linalg.eigvals(xdx_endomorphism(basis)))
    root = np.sqrt(0.5)
    assert np.allclose(eigenvalues, [-root, -root, root, root], atol=1e-5)


def test_xdx_similarity_class_survives_change_of_basis():
    fixture = get_fixture("linebundle-crossing")
    basis = trace_fiber_basis(fixture.family, 0.0, fixture.strip)
    rng = np.random.default_rng(7)
    T = np.eye(4) + 0.3 * (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    mixed = []
    for j in range(4):
        element = basis[0].scaled(T[0, j])
        for i in range(1, 4):
            element = element + basis[i].scaled(T[i, j])
        mixed.append(element.normalized())
    X, Y = xdx_endomorphism(basis), xdx_endomorphism(mixed)
    assert np.allclose(np.sort_complex(np.linalg.eigvals(X)), np.sort_complex(np.linalg.eigvals(Y)), atol=1e-5)
    for lam in (np.sqrt(0.5), -np.sqrt(0.5)):
        # one Jordan block of size 2 per eigenvalue
        for M in (X, Y):
            assert np.linalg.matrix_rank(M - lam * np.eye(4), tol=1e-4) == 3
            assert np.linalg.matrix_rank(np.linalg.matrix_power(M - lam * np.eye(4), 2), tol=1e-4) == 2


# =============================================================================
# FRAMES
# =============================================================================

def test_continuation_of_constant_family():
    fixture = get_fixture("classical-m2")
    grid = _grid(4)
    frame = frame_continuation(fixture.family, 0.0, grid, fixture.strip)
    basis, _ = coefficient_matrix(trace_fiber_basis(fixture.family, 0.0, fixture.strip))
    assert frame.provenance == FrameProvenance.CONTINUED
    assert frame.base_point == 0.0
    assert frame.rank == 2
    for elements in frame.elements:
        continued, _ = coefficient_matrix(list(elements))
        assert np.allclose(continued, basis, atol=1e-8)


def test_continued_frame_keeps_rank():
    fixture = get_fixture("linebundle-generic")
    frame = frame_continuation(fixture.family, np.pi / 4, _grid(8), fixture.strip)
    assert frame.rank == 4
    assert len(frame.elements) == 8
    for y, elements in zip(frame.y_grid, frame.elements):
        for tau in elements:
            assert apply_indicial(fixture.family, y, tau).norm() < 1e-6 * max(tau.norm(), 1.0)


def test_assembled_frame():
    fixture = get_fixture("linebundle-generic")
    frame = assembled_frame(fixture.family, _grid(4), fixture.strip)
    assert frame.provenance == FrameProvenance.ASSEMBLED
    assert frame.base_point is None
    assert all(len(elements) == 4 for elements in frame.elements)

import numpy as np
import pytest

from src.wedgetrace.core import MatrixPolyFamily, Strip
from src.wedgetrace.errors import GridTooCoarse, SingularPairing
from src.wedgetrace.fixtures import get_fixture
from src.wedgetrace.pairing import (
    Cutoff,
    adjoint_defect,
    adjoint_family,
    cutoff_independence,
    flat_pairing,
    pairing_matrix,
    transition_smoothness,
)
from src.wedgetrace.trace import (
    TraceElement,
    TraceTerm,
    coefficient_matrix,
    frame_continuation,
    trace_fiber_basis,
)

CUTOFF = Cutoff(0.5, 1.0)
OTHER = Cutoff(0.3, 0.8)


def _unit():
    return TraceElement(1, (TraceTerm(0.0, 0, np.array([1.0 + 0j])),))


def _grid(n):
    return 2.0 * np.pi * np.arange(n) / n


# =============================================================================
# CUTOFF
# =============================================================================

def test_cutoff_profile():
    x = np.array([0.1, 0.5, 0.75, 1.0, 2.0])
    values = CUTOFF(x)
    assert values[0] == 1.0 and values[1] == pytest.approx(1.0)
    assert values[2] == pytest.approx(0.5)
    assert values[3] == pytest.approx(0.0, abs=1e-12) and values[4] == 0.0


def test_cutoff_xdx_matches_finite_difference():
    x = np.array([0.55, 0.7, 0.9])
    h = 1e-6
    derivative = (CUTOFF(x + h) - CUTOFF(x - h)) / (2.0 * h)
    assert np.allclose(CUTOFF.xdx_power(1, x), -1j * x * derivative, atol=1e-7)
    assert np.all(CUTOFF.xdx_power(2, np.array([0.2, 1.5])) == 0.0)


def test_cutoff_rejects_bad_support():
    with pytest.raises(ValueError):
        Cutoff(1.0, 0.5)


# =============================================================================
# ADJOINT
# =============================================================================

def test_adjoint_family_is_shifted_conjugate():
    F = get_fixture("classical-m2").family
    Fstar = adjoint_family(F, order=2, gamma=0.5)
    sigma = np.array([0.3 + 0.2j, -1.1 - 0.4j])
    expected = np.conj(np.swapaxes(F.evaluate(0.0, np.conj(sigma) - 1j), -1, -2))
    assert np.allclose(Fstar.evaluate(0.0, sigma), expected, atol=1e-12)


def test_adjoint_default_weight_has_no_shift():
    F = MatrixPolyFamily.scalar([0.0, 1.0])
    Fstar = adjoint_family(F)
    sigma = np.array([0.5 - 0.5j])
    assert np.allclose(Fstar.evaluate(0.0, sigma), np.conj(F.evaluate(0.0, np.conj(sigma))))


@pytest.mark.parametrize("name", ["classical-m2", "linebundle-generic"])
def test_adjoint_quadrature_oracle(name):
    fixture = get_fixture(name)
    assert adjoint_defect(fixture.family, 0.0, fixture.strip) < 1e-8


# =============================================================================
# PAIRING
# =============================================================================

def test_hand_value_for_first_order_family():
    value = flat_pairing(MatrixPolyFamily.scalar([0.0, 1.0]), 0.0, _unit(), _unit(), CUTOFF, Strip(0.5, 1))
    assert value == pytest.approx(1j, abs=1e-8)


def test_coarse_grid_is_reported():
    with pytest.raises(GridTooCoarse):
        flat_pairing(MatrixPolyFamily.scalar([0.0, 1.0]), 0.0, _unit(), _unit(), CUTOFF, Strip(0.5, 1),
                     nodes=2, grid_tol=1e-12)


def test_pairing_is_cutoff_independent():
    fixture = get_fixture("linebundle-generic")
    F, strip = fixture.family, fixture.strip
    y = np.pi / 4
    basis = trace_fiber_basis(F, y, strip)
    adjoint_basis = trace_fiber_basis(adjoint_family(F, strip.order, strip.gamma), y, strip)
    G = pairing_matrix(F, y, basis, adjoint_basis, CUTOFF, strip)
    assert G.matrix.shape == (4, 4)
    assert G.is_invertible()
    assert cutoff_independence(F, y, basis, adjoint_basis, CUTOFF, OTHER, strip) < 1e-6


def test_pairing_is_sesquilinear():
    fixture = get_fixture("linebundle-generic")
    F, strip = fixture.family, fixture.strip
    y = np.pi / 4
    u1, u2 = trace_fiber_basis(F, y, strip)[:2]
    v1, v2 = trace_fiber_basis(adjoint_family(F, strip.order, strip.gamma), y, strip)[1:3]
    rng = np.random.default_rng(11)
    alpha, beta = rng.standard_normal(2) + 1j * rng.standard_normal(2)

    def pair(u, v):
        return flat_pairing(F, y, u, v, CUTOFF, strip)

    left = pair(u1.scaled(alpha) + u2, v1)
    assert left == pytest.approx(alpha * pair(u1, v1) + pair(u2, v1), abs=1e-10 * max(1.0, abs(left)))
    right = pair(u1, v1.scaled(beta) + v2)
    assert right == pytest.approx(np.conj(beta) * pair(u1, v1) + pair(u1, v2), abs=1e-10 * max(1.0, abs(right)))


# =============================================================================
# TRANSITIONS
# =============================================================================

def _frames(n):
    fixture = get_fixture("linebundle-generic")
    F, strip = fixture.family, fixture.strip
    grid = _grid(n)
    frame_a = frame_continuation(F, np.pi / 4, grid, strip)
    frame_b = frame_continuation(F, np.pi / 2, grid, strip)
    adjoint = frame_continuation(adjoint_family(F, strip.order, strip.gamma), np.pi / 4, grid, strip)
    return F, strip, frame_a, frame_b, adjoint


def test_transition_coefficients_relate_frames():
    F, strip, frame_a, frame_b, adjoint = _frames(8)
    report = transition_smoothness(F, frame_a, frame_b, adjoint, CUTOFF, strip)
    assert report.coefficients.shape == (8, 4, 4)
    assert report.second_differences.shape == (6, 4, 4)
    for i in range(8):
        M, _ = coefficient_matrix(list(frame_a.elements[i]) + list(frame_b.elements[i]))
        Ma, Mb = M[:, :4], M[:, 4:]
        assert np.linalg.norm(Ma @ report.coefficients[i] - Mb) < 1e-6 * np.linalg.norm(Mb)


def test_transition_rejects_singular_pairing():
    F, strip, frame_a, frame_b, adjoint = _frames(4)
    with pytest.raises(SingularPairing):
        transition_smoothness(F, frame_a, frame_b, adjoint, CUTOFF, strip, condition_bound=0.5)


def test_transition_needs_shared_grid():
    F, strip, frame_a, frame_b, adjoint = _frames(4)
    other = frame_continuation(F, np.pi / 2, _grid(5), strip)
    with pytest.raises(ValueError):
        transition_smoothness(F, frame_a, other, adjoint, CUTOFF, strip)

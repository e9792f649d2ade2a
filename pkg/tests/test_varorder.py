import numpy as np
import pytest
import scipy.linalg

from src.wedgetrace.core import Contour, TrigPoly
from src.wedgetrace.errors import AliasingError, ClusteringImpossible, ContourTooTight
from src.wedgetrace.fixtures import classical_example, classical_family, crossing_field
from src.wedgetrace.trace import frame_continuation
from src.wedgetrace.varorder import (
    BracketMetric,
    EndomorphismField,
    admissible_decomposition,
    bracket_symbol,
    homogeneous_power_symbol,
    matrix_power,
    matrix_power_batch,
    symbol_estimate_check,
    trace_h1_norm,
    trace_sobolev_norm,
    twisted_homogeneity_check,
    varorder_norm,
)


def _grid(n):
    return 2.0 * np.pi * np.arange(n) / n


# =============================================================================
# FIELDS AND METRICS
# =============================================================================

def test_field_constructors():
    field = EndomorphismField.diagonal([1.5, 0.5])
    assert field.rank == 2
    assert np.allclose(field(1.0), np.diag([1.5, 0.5]))
    assert np.allclose(field.shifted(1.0)(0.3), np.diag([2.5, 1.5]))


def test_field_from_samples_interpolates():
    crossing = crossing_field()
    samples = np.stack([crossing(y) for y in _grid(8)])
    field = EndomorphismField.from_samples(samples)
    for y in (0.1, 2.0, 5.5):
        assert np.allclose(field(y), crossing(y), atol=1e-12)


def test_field_rejects_rectangular_values():
    with pytest.raises(ValueError):
        EndomorphismField(TrigPoly.constant(np.ones((2, 3))))


def test_metric_must_be_positive():
    assert BracketMetric.euclidean().bracket(0.0, 3.0) == pytest.approx(np.sqrt(10.0))
    with pytest.raises(ValueError):
        BracketMetric(TrigPoly.scalar(0.5, cos=[1.0]))


# =============================================================================
# MATRIX POWERS
# =============================================================================

def test_power_of_diagonal():
    assert np.allclose(matrix_power(np.diag([0.5, 1.5]), 4.0), np.diag([2.0, 8.0]), atol=1e-10)


def test_power_of_jordan_block():
    rho = 3.0
    closed = rho * np.array([[1.0, np.log(rho)], [0.0, 1.0]])
    assert np.allclose(matrix_power(np.array([[1.0, 1.0], [0.0, 1.0]]), rho), closed, atol=1e-10)


def test_power_semigroup_and_exponential():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a *= 1.5 / np.max(np.abs(np.linalg.eigvals(a)))
        r1, r2 = rng.uniform(0.5, 2.0, size=2)
        product = matrix_power(a, r1 * r2)
        assert np.allclose(matrix_power(a, r1) @ matrix_power(a, r2), product, atol=1e-10)
        assert np.allclose(product, scipy.linalg.expm(np.log(r1 * r2) * a), atol=1e-10)


def test_power_batch_matches_single():
    a = np.array([[0.2, 1.0], [0.0, -0.3]])
    batch = matrix_power_batch(a, [0.5, 2.0, 7.0])
    for rho, P in zip([0.5, 2.0, 7.0], batch):
        assert np.allclose(P, matrix_power(a, rho), atol=1e-12)


def test_power_rejects_bad_input():
    with pytest.raises(ValueError):
        matrix_power(np.eye(2), 0.0)
    with pytest.raises(ValueError):
        matrix_power(np.diag([0.0, 5.0]), 2.0, contour=Contour.circle(0.0, 1.0, 64))
    with pytest.raises(ContourTooTight):
        matrix_power(np.diag([0.0, 0.99]), 2.0, contour=Contour.circle(0.0, 1.0, 16))


# =============================================================================
# ADMISSIBLE DECOMPOSITIONS
# =============================================================================

def test_decomposition_interval_off_collision():
    decomposition = admissible_decomposition(crossing_field(), np.pi / 2, 0.25)
    assert len(decomposition.centers) == 2
    assert decomposition.ranks == (1, 1)
    assert decomposition.radii == pytest.approx((0.1125, 0.1125))
    edge = np.arcsin(0.4375)
    assert decomposition.interval == pytest.approx((edge, np.pi - edge), abs=1e-8)


def test_decomposition_at_collision_has_one_disk():
    decomposition = admissible_decomposition(crossing_field(), 0.0, 0.25)
    assert decomposition.ranks == (2,)
    assert np.allclose(decomposition.projections(0.1)[0], np.eye(2), atol=1e-10)
    with pytest.raises(ValueError):
        decomposition.projections(1.0)


def test_projection_identities():
    field = crossing_field()
    decomposition = admissible_decomposition(field, np.pi / 2, 0.25)
    for y in decomposition.sample_points(5, fraction=0.9):
        a = field(y)
        Ps = decomposition.projections(y)
        assert np.allclose(sum(Ps), np.eye(2), atol=1e-10)
        for P in Ps:
            assert np.allclose(P @ P, P, atol=1e-10)
            assert np.allclose(P @ a, a @ P, atol=1e-10)
        T = decomposition.adapted_frame(y)
        block = np.linalg.solve(T, a @ T)
        assert abs(block[0, 1]) < 1e-10 and abs(block[1, 0]) < 1e-10


def test_decomposition_rejects_wide_cluster():
    field = EndomorphismField.diagonal([0.0, 0.12, 0.24])
    with pytest.raises(ClusteringImpossible):
        admissible_decomposition(field, 0.0, 0.25)
    with pytest.raises(ValueError):
        admissible_decomposition(field, 0.0, 1.5)


# =============================================================================
# SYMBOL ESTIMATES
# =============================================================================

def test_symbol_estimates_on_crossing_field():
    rows = symbol_estimate_check(crossing_field(), samples=3)
    assert len(rows) == 18
    for row in rows:
        expected = -row.beta + (0.25 * row.alpha if row.alpha else 0.0)
        assert row.bound == pytest.approx(expected)
    assert all(row.passed for row in rows)


# =============================================================================
# NORMS
# =============================================================================

def test_varorder_norm_of_diagonal_order():
    n = 32
    eta = np.fft.fftfreq(n, d=1.0 / n)
    orders = np.array([1.5, 0.5])
    rng = np.random.default_rng(1)
    spectrum = np.zeros((n, 2), dtype=complex)
    low = np.abs(eta) <= n // 4
    spectrum[low] = rng.standard_normal((int(low.sum()), 2)) + 1j * rng.standard_normal((int(low.sum()), 2))
    u = np.fft.ifft(spectrum * n, axis=0)
    direct = np.sqrt(np.sum((1.0 + eta[:, None] ** 2) ** orders[None, :] * np.abs(spectrum) ** 2))
    assert varorder_norm(u, EndomorphismField.diagonal(orders)) == pytest.approx(direct, rel=1e-12)


def test_varorder_norm_single_mode():
    y = _grid(16)
    u = np.stack([np.exp(3j * y), np.zeros(16)], axis=1)
    field = EndomorphismField.diagonal([1.5, 0.5])
    assert varorder_norm(u, field) == pytest.approx(10.0 ** 0.75, rel=1e-12)
    shifted = varorder_norm(np.exp(2j * y), EndomorphismField.constant([[0.0]]), s=1.0)
    assert shifted == pytest.approx(np.sqrt(5.0), rel=1e-12)


def test_varorder_norm_is_monotone_in_shift():
    n = 32
    eta = np.fft.fftfreq(n, d=1.0 / n)
    rng = np.random.default_rng(5)
    spectrum = np.zeros((n, 2), dtype=complex)
    low = np.abs(eta) <= n // 4
    spectrum[low] = rng.standard_normal((int(low.sum()), 2)) + 1j * rng.standard_normal((int(low.sum()), 2))
    u = np.fft.ifft(spectrum * n, axis=0)
    field = EndomorphismField.constant([[1.0, 0.3], [0.3, 0.5]])
    norms = [varorder_norm(u, field, s=s) for s in (-1.0, -0.5, 0.0, 0.5, 1.0)]
    assert all(b > a for a, b in zip(norms, norms[1:]))


def test_varorder_norm_validates_grid():
    field = EndomorphismField.constant([[0.0]])
    with pytest.raises(AliasingError):
        varorder_norm(np.exp(9j * _grid(32)), field)
    with pytest.raises(ValueError):
        varorder_norm(np.ones(24), field)
    with pytest.raises(ValueError):
        varorder_norm(np.ones((16, 2)), field)


def test_trace_norm_of_first_order_operator():
    ex = classical_example(1)
    y = _grid(32)
    frame = frame_continuation(classical_family(ex), 0.0, y, ex.strip)
    section = (np.cos(2.0 * y) + 0.5 * np.sin(5.0 * y))[:, None].astype(complex)
    expected = np.sqrt(0.5 * 5.0 ** 0.5 + 0.125 * 26.0 ** 0.5)
    assert trace_sobolev_norm(section, frame, 0.5) == pytest.approx(expected, rel=1e-12)
    assert trace_h1_norm(section, frame) == pytest.approx(expected, rel=1e-12)


def test_trace_norm_needs_uniform_grid():
    ex = classical_example(1)
    frame = frame_continuation(classical_family(ex), 0.0, np.linspace(0.0, 1.0, 4), ex.strip)
    with pytest.raises(ValueError):
        trace_sobolev_norm(np.ones((4, 1)), frame, 0.5)


# =============================================================================
# TWISTED HOMOGENEITY
# =============================================================================

def test_homogeneous_symbol_is_twisted_homogeneous():
    field = crossing_field()
    zero = EndomorphismField.constant(np.zeros((2, 2)))
    report = twisted_homogeneity_check(homogeneous_power_symbol(field), field, zero, 0.0,
                                       y_samples=[0.5, np.pi / 2])
    assert report.max_defect < 1e-9


def test_bracket_symbol_is_homogeneous_only_at_infinity():
    field = EndomorphismField.diagonal([1.0, 0.5])
    zero = EndomorphismField.constant(np.zeros((2, 2)))
    report = twisted_homogeneity_check(bracket_symbol(field), field, zero, 0.0, y_samples=[0.0])
    assert report.defects[-1] < report.defects[0]
    with pytest.raises(ValueError):
        twisted_homogeneity_check(bracket_symbol(field), field, zero, 0.0, etas=[0.5])

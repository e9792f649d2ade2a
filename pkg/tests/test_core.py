import numpy as np
import pytest

from src.wedgetrace.config import ContourConfig
from src.wedgetrace.core import (
    Contour,
    LogGrid,
    MatrixPolyFamily,
    Strip,
    TrigPoly,
    cluster_points,
    far_field_invertible,
    sort_key,
    trapezoid_contour_quadrature,
)
from src.wedgetrace.errors import NodeOnSingularity


def test_strip_bounds():
    strip = Strip(1.0, 2)
    assert strip.lower == -1.0
    assert strip.midline == 0.0
    assert strip.contains(0.5j)
    assert not strip.contains(1.0j)
    assert not strip.contains(0.95j, margin=0.1)


def test_strip_rejects_fractional_order():
    with pytest.raises(ValueError):
        Strip(1.0, 1.5)


def test_contour_counts_enclosed_pole():
    contour = Contour.circle(0.0, 1.0, 64)
    inside = trapezoid_contour_quadrature(contour, lambda z: 1.0 / (z - 0.3))
    outside = trapezoid_contour_quadrature(contour, lambda z: 1.0 / (z - 2.0))
    assert inside == pytest.approx(1.0, abs=1e-12)
    assert abs(outside) < 1e-12


def test_rectangle_and_ellipse_quadrature():
    for contour in (Contour.rectangle(0.0, 1.0, 0.5, 256), Contour.ellipse(0.0, 1.0, 0.5, 128)):
        assert trapezoid_contour_quadrature(contour, lambda z: 1.0 / (z - 0.1j)) == pytest.approx(1.0, abs=1e-8)


def test_node_on_singularity():
    contour = Contour.circle(0.0, 1.0, 16)
    with pytest.raises(NodeOnSingularity):
        trapezoid_contour_quadrature(contour, lambda z: 1.0 / (z - 1.0))


def test_contour_too_few_nodes():
    with pytest.raises(ValueError):
        Contour.circle(0.0, 1.0, 8)


def test_contour_from_config_defaults_to_inscribed_circle():
    contour = Contour.from_config(ContourConfig(), Strip(1.0, 2))
    assert contour.radius == pytest.approx(0.95)
    assert contour.center == 0.0
    with pytest.raises(ValueError):
        Contour.from_config(ContourConfig())


def test_log_grid_integrates_dx_over_x():
    grid = LogGrid.gauss_legendre(0.5, 2.0, 16)
    assert np.sum(grid.weights) == pytest.approx(np.log(4.0))
    assert grid.refined().size == 32


def test_trig_poly_scalar_evaluation():
    p = TrigPoly.scalar(0.5, cos=[0.1], sin=[0.2])
    y = np.linspace(0.0, 2.0 * np.pi, 7)
    assert np.allclose(p(y), 0.5 + 0.1 * np.cos(y) + 0.2 * np.sin(y))
    assert np.allclose(p.derivative()(y), -0.1 * np.sin(y) + 0.2 * np.cos(y))


def test_trig_poly_from_samples_interpolates():
    p = TrigPoly.scalar(1.0, cos=[0.0, 0.3], sin=[0.4])
    q = TrigPoly.from_samples(p.sample(16)).trimmed()
    assert q.degree == 2
    assert np.allclose(q(1.234), p(1.234))


def test_trig_poly_products_and_winding():
    p = TrigPoly(np.array([0.0, 0.0, 1.0]))  # e^{iy}
    assert p.winding_number() == 1
    assert np.allclose((p * p.conj())(0.7), 1.0)
    assert TrigPoly.scalar(2.0, sin=[1.0]).winding_number() == 0


def test_matrix_poly_family_evaluation():
    F = MatrixPolyFamily.constant([np.diag([1.0, 2.0]), np.zeros((2, 2)), np.eye(2)])
    assert np.allclose(F.evaluate(0.0, 1j), np.diag([0.0, 1.0]))
    assert np.allclose(F.derivative(0.0, 2.0), 4.0 * np.eye(2))
    assert F.degree == 2 and F.dim == 2


def test_far_field_invertible():
    F = MatrixPolyFamily.scalar([1.0, 0.0, 1.0])
    assert far_field_invertible(F, 0.0, Strip(0.5, 1))


def test_cluster_points_single_linkage():
    groups = cluster_points([0.0, 0.05, 0.09, 1.0], 0.06)
    assert groups == [[0, 1, 2], [3]]
    assert cluster_points([2.0, 0.0, 2.0 + 1e-12], 1e-9) == [[0, 2], [1]]
    assert cluster_points([0.0, 0.5], 0.5) == [[0], [1]]
    assert cluster_points([], 1.0) == []
    assert cluster_points([1.0, 1.0], 0.0) == [[0], [1]]


def test_sort_key_orders_by_imaginary_part_first():
    values = [1.0 - 1j, -1.0 + 1j, 2.0 + 1j]
    assert sorted(values, key=sort_key) == [-1.0 + 1j, 2.0 + 1j, 1.0 - 1j]

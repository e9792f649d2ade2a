import numpy as np
import pytest

from src.wedgetrace.core import TrigPoly
from src.wedgetrace.errors import TruncationWarning
from src.wedgetrace.fixtures import LineBundleExample, crossing_line_bundle, line_bundle_family, line_bundle_operator
from src.wedgetrace.wedge import (
    CoefficientTable,
    FiberKind,
    WedgeOperatorSpec,
    ellipticity_sample_check,
    fiber_basis,
    indicial_family,
    indicial_operator,
    kappa_conjugate,
    normal_family,
    wedge_principal_symbol,
)


def _circle_example():
    return LineBundleExample.on_circle(
        TrigPoly.scalar(0.5, sin=[0.2]), TrigPoly.constant(-1.0),
        TrigPoly.constant(0.0), TrigPoly.scalar(0.5, sin=[-0.2]),
        modes=2, c=1.0,
    )


def test_coefficient_table_evaluation():
    table = CoefficientTable.from_terms([(0, 0, 0, [[1.0]]), (1, 1, 0, [[2.0]]), (0, 0, 1, [[0.5]])])
    x, y, z = 0.3, 0.7, 1.1
    expected = 1.0 + 2.0 * x * np.exp(1j * y) + 0.5 * np.exp(1j * z)
    assert table(x, y, z)[0, 0] == pytest.approx(expected)
    assert table.z_degree == 1


def test_spec_rejects_excess_order():
    with pytest.raises(ValueError):
        WedgeOperatorSpec(1, 1, 1, {(2, 0, 0): CoefficientTable.constant([[1.0]])})


def test_fiber_basis_circle_ordering():
    basis = fiber_basis("circle", 3, 1.0)
    assert basis.modes == (0, 1, -1)
    assert np.allclose(basis.eigenvalues, [1.0, np.sqrt(2.0), np.sqrt(2.0)])
    with pytest.raises(ValueError):
        fiber_basis("point", 2)


def test_principal_symbol_of_line_bundle_operator():
    spec = line_bundle_operator(crossing_line_bundle())
    assert np.allclose(wedge_principal_symbol(spec, (0.0, 0.4, 0.0), (1.0, 0.0, 0.0)), np.eye(2))
    zeta = wedge_principal_symbol(spec, (0.0, np.pi / 2.0, 0.0), (0.0, 0.0, 1.0))
    assert np.allclose(zeta, np.diag([0.7, 0.3]))
    with pytest.raises(ValueError):
        wedge_principal_symbol(spec, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


def test_principal_symbol_is_frame_covariant():
    spec = line_bundle_operator(crossing_line_bundle())
    left = np.array([[1.0, 2.0], [0.0, 1.0]])
    right = np.array([[0.5, 0.0], [1.0, 3.0]])
    point, covector = (0.2, 1.1, 0.4), (0.3, -0.7, 1.2)
    expected = left @ wedge_principal_symbol(spec, point, covector) @ right
    assert np.allclose(wedge_principal_symbol(spec.conjugated(left, right), point, covector), expected)


def test_ellipticity_check():
    report = ellipticity_sample_check(line_bundle_operator(crossing_line_bundle()), 32)
    assert report.elliptic
    assert report.min_singular_value > 0.2

    degenerate = WedgeOperatorSpec(2, 1, 1, {(2, 0, 0): CoefficientTable.constant([[1.0]])}, 0.5, FiberKind.POINT)
    assert not ellipticity_sample_check(degenerate, 8).elliptic


def test_indicial_family_matches_line_bundle_family():
    example = _circle_example()
    basis = fiber_basis("circle", 2, example.eigenvalues[0] ** 2)
    F = indicial_family(line_bundle_operator(example), basis)
    G = line_bundle_family(example)
    assert F.degree == G.degree == 2
    for y in (0.0, 0.7, 2.5):
        assert np.allclose(F.coefficients(y), G.coefficients(y))


def test_indicial_family_warns_on_truncation():
    coupling = CoefficientTable.from_terms([(0, 0, 1, [[1.0]])])
    spec = WedgeOperatorSpec(2, 1, 1, {(2, 0, 0): CoefficientTable.constant([[1.0]]), (0, 0, 0): coupling})
    with pytest.warns(TruncationWarning):
        indicial_family(spec, fiber_basis("circle", 1))


def test_normal_family_at_zero_is_indicial_operator():
    spec = line_bundle_operator(crossing_line_bundle())
    basis = fiber_basis("circle", 2, 1.0)
    assert normal_family(spec, basis, 0.3, 0.0).same_terms(indicial_operator(spec, basis, 0.3))


def test_normal_family_boundary_matrix_is_indicial_family():
    spec = line_bundle_operator(crossing_line_bundle())
    basis = fiber_basis("circle", 2, 1.0)
    op = indicial_operator(spec, basis, 1.1)
    F = indicial_family(spec, basis)
    sigma = 0.3 + 0.2j
    assert np.allclose(op.boundary_matrix(sigma), F.evaluate(1.1, sigma))


def test_kappa_homogeneity_is_exact():
    spec = line_bundle_operator(crossing_line_bundle())
    basis = fiber_basis("circle", 2, 1.0)
    conjugated = kappa_conjugate(normal_family(spec, basis, 0.3, 0.75), 2.0)
    assert conjugated.same_terms(normal_family(spec, basis, 0.3, 1.5))
    with pytest.raises(ValueError):
        kappa_conjugate(conjugated, 0.0)

import numpy as np
import pytest

from src.wedgetrace.core import TrigPoly
from src.wedgetrace.fixtures import (
    FIXTURES,
    LineBundleExample,
    classical_example,
    classical_family,
    classical_taylor_trace,
    closed_form_spectrum,
    collision_frame_reference,
    crossing_field,
    crossing_line_bundle,
    disk_graph_ratios,
    disk_norm_witness,
    falling_polynomial,
    generic_line_bundle,
    get_fixture,
    line_bundle_family,
)
from src.wedgetrace.trace import apply_indicial, to_trace_element


def _constant_bundle(phi12):
    half = TrigPoly.constant(0.5)
    return LineBundleExample(half, TrigPoly.constant(phi12), TrigPoly.constant(0.0), half, (1.0, 2.0))


# =============================================================================
# LINE-BUNDLE EXAMPLES
# =============================================================================

def test_line_bundle_validation():
    zero = TrigPoly.constant(0.0)
    with pytest.raises(ValueError):
        LineBundleExample(zero, zero, zero, zero, (2.0, 1.0))
    with pytest.raises(ValueError):
        LineBundleExample(zero, zero, zero, zero, (0.0,))
    with pytest.raises(ValueError):
        LineBundleExample(zero, zero, zero, zero, ())


def test_builtin_examples_are_in_validated_regime():
    assert generic_line_bundle().in_validated_regime()
    assert crossing_line_bundle().in_validated_regime()
    assert generic_line_bundle().strip.order == 2


def test_line_bundle_family_blocks():
    ex = generic_line_bundle()
    F = line_bundle_family(ex)
    assert F.dim == 4 and F.degree == 2
    sigma = 0.3 + 0.1j
    value = F.evaluate(0.0, sigma)
    assert value[0, 0] == pytest.approx(sigma ** 2 + 0.49)
    assert value[0, 1] == pytest.approx(0.3)
    assert value[3, 3] == pytest.approx(sigma ** 2 + 4.0 * 0.81)
    assert value[0, 2] == 0.0


def test_closed_form_spectrum_inside_strip():
    roots = closed_form_spectrum(generic_line_bundle(), 0.0)
    assert np.allclose(roots, [0.9j, 0.7j, -0.7j, -0.9j], atol=1e-12)


def test_closed_form_needs_upper_triangular():
    one = TrigPoly.constant(1.0)
    ex = LineBundleExample(one, one, one, one, (1.0,))
    with pytest.raises(ValueError):
        closed_form_spectrum(ex, 0.0)


def _proportional(a, b):
    return np.linalg.matrix_rank(np.stack([a.ravel(), b.ravel()]), tol=1e-10) == 1


def test_collision_printed_matches_oracle():
    ex = crossing_line_bundle()
    printed = collision_frame_reference(ex, 0.0, "printed")
    oracle = collision_frame_reference(ex, 0.0, "oracle")
    assert len(printed) == len(oracle) == 4
    for a, b in zip(printed, oracle):
        assert a.parts[0].sigma == pytest.approx(b.parts[0].sigma)
        assert _proportional(a.parts[0].coeffs, b.parts[0].coeffs)


def test_collision_oracle_lies_in_kernel():
    ex = crossing_line_bundle()
    F = line_bundle_family(ex)
    for sp in collision_frame_reference(ex, 0.0, "oracle"):
        assert apply_indicial(F, 0.0, to_trace_element(sp)).norm() < 1e-10


def test_collision_forms_differ_unless_unit_coupling():
    ex = _constant_bundle(0.5)
    printed = collision_frame_reference(ex, 0.0, "printed")
    oracle = collision_frame_reference(ex, 0.0, "oracle")
    assert not _proportional(printed[1].parts[0].coeffs, oracle[1].parts[0].coeffs)


def test_collision_reference_rejects_bad_input():
    with pytest.raises(ValueError):
        collision_frame_reference(crossing_line_bundle(), 1.0)
    with pytest.raises(ValueError):
        collision_frame_reference(crossing_line_bundle(), 0.0, form="other")


def test_crossing_field_meets_at_zero():
    assert np.allclose(np.linalg.eigvals(crossing_field()(0.0)), [0.5, 0.5])
    assert np.allclose(np.sort(np.linalg.eigvals(crossing_field()(np.pi / 2)).real), [0.3, 0.7])


# =============================================================================
# CLASSICAL OPERATORS
# =============================================================================

def test_falling_polynomial_roots():
    assert np.allclose(np.sort_complex(falling_polynomial(3).roots()), [-2j, -1j, 0.0])
    assert falling_polynomial(0).coef.tolist() == [1.0]


def test_classical_example_validation():
    with pytest.raises(ValueError):
        classical_example(0)
    ex = classical_example(2, rank=2)
    assert ex.strip.order == 2
    assert classical_family(ex).dim == 2


def test_taylor_trace_is_polynomial_kernel():
    tau = classical_taylor_trace([np.array([1.0]), np.array([2.0])])
    x = np.array([0.5, 2.0])
    assert np.allclose(tau(x)[:, 0], 1.0 + 2j * x)
    F = classical_family(classical_example(2))
    assert apply_indicial(F, 0.0, tau).norm() < 1e-12
    with pytest.raises(ValueError):
        classical_taylor_trace([])


# =============================================================================
# DISK WITNESS
# =============================================================================

def test_disk_witness_bracket_is_stable():
    ratios = [disk_norm_witness(n).bracket_ratio for n in (8, 16)]
    report = disk_norm_witness(8)
    assert report.lower > 0.0
    assert len(report.per_mode) == 17
    assert abs(ratios[1] / ratios[0] - 1.0) <= 0.2
    with pytest.raises(ValueError):
        disk_norm_witness(1)


def test_graph_norm_ratio_grows():
    ratios = disk_graph_ratios(64)
    assert ratios.shape == (65,)
    n = np.arange(8, 65)
    slope = np.polyfit(np.log(n), np.log(ratios[n]), 1)[0]
    assert slope > 1.5


# =============================================================================
# REGISTRY
# =============================================================================

def test_registry():
    assert set(FIXTURES) == {"classical-m1", "classical-m2", "linebundle-generic", "linebundle-crossing", "disk-witness"}
    assert get_fixture("linebundle-crossing").order_field is not None
    assert get_fixture("disk-witness").family is None
    with pytest.raises(ValueError):
        get_fixture("nonexistent")

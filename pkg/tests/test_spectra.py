import numpy as np
import pytest

from src.wedgetrace.core import Contour, MatrixPolyFamily, Strip, sort_key
from src.wedgetrace import spectra
from src.wedgetrace.errors import DegenerateFamily, IncompleteSpectrum, MatchingAmbiguity, NodeOnSingularity
from src.wedgetrace.fixtures import closed_form_spectrum, get_fixture
from src.wedgetrace.spectra import (
    SolverMethod,
    _make_points,
    check_finite_specb,
    collision_points,
    companion_solve,
    contour_solve,
    count_in_contour,
    jordan_profile,
    linearization_eigenvalues,
    spectrum_curve,
)


def _grid(n):
    return 2.0 * np.pi * np.arange(n) / n


def test_companion_matches_closed_form():
    fixture = get_fixture("linebundle-generic")
    for y in (0.0, 0.4, 3.0):
        roots = [p.sigma for p in companion_solve(fixture.family, y, fixture.strip)]
        assert np.allclose(roots, closed_form_spectrum(fixture.example, y), atol=1e-8)


def test_contour_matches_closed_form():
    fixture = get_fixture("linebundle-generic")
    contour = fixture.strip.inscribed_circle()
    roots = [p.sigma for p in contour_solve(fixture.family, 1.3, contour)]
    assert len(roots) == 4
    assert np.allclose(roots, closed_form_spectrum(fixture.example, 1.3), atol=1e-8)


def test_count_in_contour():
    fixture = get_fixture("linebundle-generic")
    count = count_in_contour(fixture.family, 0.0, fixture.strip.inscribed_circle())
    assert count.count == 4
    assert count.defect < 1e-8


def test_classical_roots_are_simple():
    fixture = get_fixture("classical-m2")
    points = companion_solve(fixture.family, 0.0, fixture.strip)
    assert [p.sigma for p in points] == pytest.approx([0.0, -1j], abs=1e-10)
    assert all(p.algebraic == 1 and p.partials == (1,) for p in points)


def test_jordan_chain_at_collision():
    fixture = get_fixture("linebundle-crossing")
    sigma = 1j * np.sqrt(0.5)
    partials, resolved = jordan_profile(fixture.family, 0.0, sigma, 2)
    assert partials == (2,)
    assert resolved


def test_spectrum_curves_generic():
    fixture = get_fixture("linebundle-generic")
    curves = spectrum_curve(fixture.family, _grid(16), fixture.strip)
    assert len(curves) == 4
    assert collision_points(curves) == []
    assert all(len(c.samples) == 16 for c in curves)


def test_spectrum_curves_mark_collision():
    fixture = get_fixture("linebundle-crossing")
    with pytest.warns(MatchingAmbiguity):
        curves = spectrum_curve(fixture.family, _grid(16), fixture.strip)
    assert 0.0 in collision_points(curves)


def test_spectrum_curves_thread_mapper_is_order_preserving():
    fixture = get_fixture("linebundle-generic")
    grid = _grid(8)
    serial = spectrum_curve(fixture.family, grid, fixture.strip)
    mapped = spectrum_curve(fixture.family, grid, fixture.strip, mapper=lambda f, xs: [f(x) for x in xs])
    assert [[p.sigma for _, p in c.samples] for c in serial] == [[p.sigma for _, p in c.samples] for c in mapped]


def test_finite_specb():
    fixture = get_fixture("linebundle-generic")
    assert check_finite_specb(fixture.family, _grid(8), fixture.strip).passed
    boundary = MatrixPolyFamily.scalar([1.0, 0.0, 1.0])
    report = check_finite_specb(boundary, [0.0], Strip(1.0, 2))
    assert not report.passed
    assert report.offending


def test_degenerate_family():
    with pytest.raises(DegenerateFamily):
        companion_solve(MatrixPolyFamily.constant([np.zeros((2, 2)), np.zeros((2, 2))]), 0.0, Strip(1.0, 2))
    singular = np.diag([1.0, 0.0])
    with pytest.raises(DegenerateFamily):
        companion_solve(MatrixPolyFamily.constant([singular, singular]), 0.0, Strip(1.0, 2))


def test_contour_through_root():
    F = MatrixPolyFamily.scalar([0.25, 0.0, 1.0])
    with pytest.raises(NodeOnSingularity):
        contour_solve(F, 0.0, Contour.circle(0.0, 0.5, 16))


def _random_cubic(seed, dim=4):
    rng = np.random.default_rng(seed)
    return MatrixPolyFamily.constant(
        [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(4)]
    )


def _separated_disk(eigenvalues, min_ratio=1.3):
    """Radius between consecutive moduli |e_k| < R < |e_k+1| with 2 <= k <= 8, or None."""
    moduli = np.sort(np.abs(eigenvalues))
    for k in range(2, 9):
        if moduli[k] / moduli[k - 1] >= min_ratio:
            return float(np.sqrt(moduli[k] * moduli[k - 1]))
    return None


def test_contour_matches_companion_on_random_cubics():
    checked = 0
    for seed in range(30):
        F = _random_cubic(seed)
        eigenvalues = linearization_eigenvalues(F, 0.0)
        radius = _separated_disk(eigenvalues)
        if radius is None:
            continue
        expected = np.array(sorted(eigenvalues[np.abs(eigenvalues) < radius], key=sort_key))
        roots = np.array([p.sigma for p in contour_solve(F, 0.0, Contour.circle(0.0, radius, 256))])
        assert roots.size == expected.size, seed
        assert np.max(np.abs(roots - expected)) <= 1e-8, seed
        checked += 1
    assert checked >= 5


def _corrupt_global_estimates(monkeypatch, nodes):
    exact = spectra._hankel_eigenvalues

    def shifted(F, y, contour, count, probe, rank_tol):
        estimates = exact(F, y, contour, count, probe, rank_tol)
        return estimates + 10.0 if contour.nodes in nodes else estimates

    monkeypatch.setattr(spectra, "_hankel_eigenvalues", shifted)


def test_contour_retries_with_more_nodes(monkeypatch):
    fixture = get_fixture("linebundle-generic")
    _corrupt_global_estimates(monkeypatch, {200})
    contour = fixture.strip.inscribed_circle(nodes=200)
    roots = [p.sigma for p in contour_solve(fixture.family, 1.3, contour)]
    assert np.allclose(roots, closed_form_spectrum(fixture.example, 1.3), atol=1e-8)


def test_contour_missing_roots_raise(monkeypatch):
    fixture = get_fixture("linebundle-generic")
    _corrupt_global_estimates(monkeypatch, {200, 400, 800})
    with pytest.raises(IncompleteSpectrum) as info:
        contour_solve(fixture.family, 1.3, fixture.strip.inscribed_circle(nodes=200))
    assert info.value.context["found"] == 0
    assert info.value.context["count"] == 4


def test_residual_above_tolerance_is_flagged():
    F = MatrixPolyFamily.scalar([0.0, 1j, 1.0])
    exact, off = _make_points(F, 0.0, np.array([0.0, 1e-3]), SolverMethod.COMPANION, 1e-7, 1e-6)
    assert exact.sigma == 0.0 and exact.residual_ok
    assert off.residual == pytest.approx(abs(1e-6 + 1e-3j))
    assert not off.residual_ok

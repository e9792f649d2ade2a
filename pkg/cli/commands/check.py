# =============================================================================
# COMMAND - CHECK
# =============================================================================
"""
Acceptance suite. Each criterion is evaluated independently; a numerical
failure inside a criterion marks that criterion failed instead of aborting
the run. Results go to acceptance.json; any failure sets exit code 4.
"""

import logging
import warnings
from dataclasses import replace
from typing import Callable, List, Sequence

import numpy as np
import scipy.linalg

from src.wedgetrace.core import MatrixPolyFamily, Strip, sort_key
from src.wedgetrace.errors import EXIT_ACCEPTANCE, MatchingAmbiguity, WedgeTraceError
from src.wedgetrace.fixtures import (
    classical_example,
    classical_family,
    closed_form_spectrum,
    collision_frame_reference,
    crossing_field,
    crossing_line_bundle,
    disk_graph_ratios,
    disk_norm_witness,
    get_fixture,
    line_bundle_operator,
)
from src.wedgetrace.pairing import (
    adjoint_defect,
    adjoint_family,
    cutoff_independence,
    flat_pairing,
    pairing_matrix,
    transition_smoothness,
)
from src.wedgetrace.spectra import check_finite_specb, collision_points, companion_solve, contour_solve, spectrum_curve
from src.wedgetrace.trace import (
    TraceElement,
    TraceTerm,
    apply_indicial,
    frame_continuation,
    to_trace_element,
    trace_fiber_basis,
    xdx_endomorphism,
)
from src.wedgetrace.varorder import (
    EndomorphismField,
    admissible_decomposition,
    matrix_power,
    symbol_estimate_check,
    trace_sobolev_norm,
    varorder_norm,
)
from src.wedgetrace.wedge import fiber_basis, indicial_operator, kappa_conjugate, normal_family

from ..schemas import AcceptanceOut, CriterionResult
from ..services import ArtifactSet, RunContext, WorkerPool, off_collision_ratio, stage, uniform_grid
from . import frame as frame_command
from . import spectrum as spectrum_command

logger = logging.getLogger(__name__)

SUITES = ("paper",)

SPECTRUM_GRID = 64
FRAME_GRID = 32
PAIRING_GRID = 8
NORM_GRID = 32
PAIRING_FIXTURES = ("classical-m1", "classical-m2", "linebundle-generic", "linebundle-crossing")
WITNESS_MODES = (8, 16, 32, 64)
SAMPLE_X = np.geomspace(0.25, 4.0, 33)


# =============================================================================
# HELPERS
# =============================================================================

def _fixture_context(ctx: RunContext, name: str, grid: int) -> RunContext:
    """Sub-context on a registered fixture with its own strip."""
    fixture = get_fixture(name)
    return replace(ctx, fixture_name=name, grid=grid, _fixture=fixture, strip_override=fixture.strip)


def _result(criterion: int, name: str, value: float, threshold: float, detail: str = "",
            higher_is_better: bool = False) -> CriterionResult:
    value = float(value)
    passed = bool(np.isfinite(value) and (value >= threshold if higher_is_better else value <= threshold))
    return CriterionResult(criterion=criterion, name=name, passed=passed, value=value,
                           threshold=threshold, detail=detail)


def _sampled(elements: Sequence[TraceElement]) -> np.ndarray:
    """Elements evaluated on a fixed x sample, one column each."""
    return np.stack([np.ravel(e(SAMPLE_X)) for e in elements], axis=1)


def _direction_defect(u: np.ndarray, v: np.ndarray) -> float:
    """min over unit phases c of ‖u/‖u‖ - c v/‖v‖‖."""
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    inner = np.vdot(v, u)
    phase = inner / abs(inner) if abs(inner) > 0.0 else 1.0
    return float(np.linalg.norm(u - phase * v))


def _span_defect(A: np.ndarray, B: np.ndarray) -> float:
    """Relative part of the columns of A outside span(B)."""
    Q, _ = np.linalg.qr(B)
    residual = A - Q @ (Q.conj().T @ A)
    return float(np.linalg.norm(residual) / np.linalg.norm(A))


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b, 2) / max(np.linalg.norm(b, 2), 1e-300))


# =============================================================================
# CRITERIA
# =============================================================================

def line_bundle_spectrum(ctx: RunContext) -> List[CriterionResult]:
    sub = _fixture_context(ctx, "linebundle-generic", SPECTRUM_GRID)
    family, strip, example = sub.family, sub.strip, sub.fixture.example
    contour = strip.inscribed_circle(nodes=ctx.contour_nodes)

    def errors_at(y: float):
        expected = np.asarray(closed_form_spectrum(example, y, strip))
        out = []
        for points in (companion_solve(family, y, strip), contour_solve(family, y, contour)):
            found = np.asarray(sorted((p.sigma for p in points), key=sort_key))
            out.append(np.inf if found.size != 4 or expected.size != 4 else float(np.max(np.abs(found - expected))))
        return out

    with stage("check.line_bundle_spectrum"):
        errors = np.asarray(ctx.pool.map(errors_at, sub.y_grid))
    return [
        _result(1, "line-bundle spectrum, companion", np.max(errors[:, 0]), 1e-8, "four strip roots per y"),
        _result(1, "line-bundle spectrum, contour", np.max(errors[:, 1]), 1e-8, "four strip roots per y"),
    ]


def classical_traces(ctx: RunContext) -> List[CriterionResult]:
    results = []
    for m in (1, 2, 3):
        ex = classical_example(m)
        family, strip = classical_family(ex), ex.strip
        expected = np.array([-1j * j for j in range(m)])
        points = sorted(companion_solve(family, 0.0, strip), key=lambda p: sort_key(p.sigma))
        roots = np.array([p.sigma for p in points])
        root_error = np.inf if roots.size != m or any(p.algebraic != ex.rank for p in points) else \
            float(np.max(np.abs(roots - expected)))
        results.append(_result(2, f"classical m={m} roots", root_error, 1e-8))

        basis = trace_fiber_basis(family, 0.0, strip)
        polynomial = len(basis) == m and all(
            t.ell == 0 and abs(t.sigma + 1j * round(-t.sigma.imag)) < 1e-8 for tau in basis for t in tau.terms
        )
        degrees = sorted(int(round(-t.sigma.imag)) for tau in basis for t in tau.terms)
        results.append(CriterionResult(criterion=2, name=f"classical m={m} basis realizes polynomials",
                                       passed=bool(polynomial and degrees == list(range(m))),
                                       detail=f"x-degrees {degrees}"))
        residual = max(apply_indicial(family, 0.0, tau).norm() for tau in basis)
        results.append(_result(2, f"classical m={m} indicial residual", residual, 1e-12))
        eigs = np.sort(np.linalg.eigvals(xdx_endomorphism(basis)).real)
        results.append(_result(2, f"classical m={m} x∂_x eigenvalues", np.max(np.abs(eigs - np.arange(m))), 1e-8))
    return results


def collision_frame(ctx: RunContext) -> List[CriterionResult]:
    sub = _fixture_context(ctx, "linebundle-crossing", FRAME_GRID)
    family, strip, example = sub.family, sub.strip, sub.fixture.example
    defaults = ctx.config.defaults
    results = []

    basis = trace_fiber_basis(family, 0.0, strip)
    log_power = max(tau.max_log_power for tau in basis)
    results.append(_result(3, "collision basis carries a log term", log_power, 1, higher_is_better=True))

    with stage("check.collision_frame"):
        adjoint = adjoint_family(family, strip.order, strip.gamma)
        frame_a = sub.continued_frame(defaults.base_points[0])
        frame_b = sub.continued_frame(defaults.base_points[1])
        adjoint_frame = sub.continued_frame(defaults.base_points[0], family=adjoint)
        cutoff, _ = ctx.cutoffs()
        report = transition_smoothness(family, frame_a, frame_b, adjoint_frame, cutoff, strip,
                                       defaults.pairing_nodes, defaults.condition_bound, mapper=ctx.pool.map)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MatchingAmbiguity)
            collisions = collision_points(spectrum_curve(family, sub.y_grid, strip, mapper=ctx.pool.map))
    summary = off_collision_ratio(report.second_differences, report.y_grid, collisions)
    results.append(_result(3, "transition second differences / off-collision median", summary["ratio"], 10.0,
                           f"collisions at {[round(c, 6) for c in collisions]}"))

    printed = [to_trace_element(sp) for sp in collision_frame_reference(example, 0.0, "printed")]
    oracle = [to_trace_element(sp) for sp in collision_frame_reference(example, 0.0, "oracle")]
    P, O = _sampled(printed), _sampled(oracle)
    mismatch = max(_direction_defect(P[:, j], O[:, j]) for j in range(P.shape[1]))
    results.append(_result(3, "printed collision frame vs residue oracle", mismatch, 1e-6))

    B = _sampled(basis)
    mutual = max(_span_defect(O, B), _span_defect(B, O)) if B.shape[1] == O.shape[1] else np.inf
    results.append(_result(3, "collision frame spans the trace fiber", mutual, 1e-6))
    return results


def pairing_properties(ctx: RunContext) -> List[CriterionResult]:
    results = []
    cutoff, other = ctx.cutoffs()
    nodes = ctx.config.defaults.pairing_nodes
    for name in PAIRING_FIXTURES:
        sub = _fixture_context(ctx, name, PAIRING_GRID)
        family, strip = sub.family, sub.strip
        results.append(_result(4, f"{name} adjoint quadrature oracle", adjoint_defect(family, 0.0, strip), 1e-8))
        if not check_finite_specb(family, sub.y_grid, strip).passed:
            logger.info(f"Skipping pairing for {name}: spectrum on the strip boundary")
            continue
        with stage("check.pairing", fixture=name):
            frame = sub.continued_frame(ctx.config.defaults.base_points[0])
            adjoint_frame = sub.continued_frame(ctx.config.defaults.base_points[0],
                                                family=adjoint_family(family, strip.order, strip.gamma))
            matrices = ctx.pool.map(
                lambda i: pairing_matrix(family, frame.y_grid[i], frame.elements[i], adjoint_frame.elements[i],
                                         cutoff, strip, nodes),
                range(len(frame.y_grid)),
            )
        results.append(_result(4, f"{name} pairing condition", max(G.condition for G in matrices), 1e6))
        spread = cutoff_independence(family, frame.y_grid[0], frame.elements[0], adjoint_frame.elements[0],
                                     cutoff, other, strip, nodes)
        results.append(_result(4, f"{name} cutoff independence", spread, 1e-6))

    unit = TraceElement(1, (TraceTerm(0.0, 0, np.array([1.0 + 0j])),))
    value = flat_pairing(MatrixPolyFamily.scalar([0.0, 1.0]), 0.0, unit, unit, cutoff, Strip(0.5, 1))
    results.append(_result(4, "hand value [1,1] = i for F(σ) = σ", abs(value - 1j), 1e-8, f"got {value:.12g}"))
    return results


def matrix_powers(ctx: RunContext) -> List[CriterionResult]:
    results = []
    diag = matrix_power(np.diag([0.5, 1.5]), 4.0)
    results.append(_result(5, "diag(1/2, 3/2) at ϱ=4", np.max(np.abs(diag - np.diag([2.0, 8.0]))), 1e-10))

    rng = np.random.default_rng(0)
    semigroup, exponential = 0.0, 0.0
    for _ in range(100):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a *= 1.5 * rng.uniform(0.2, 1.0) / np.max(np.abs(np.linalg.eigvals(a)))
        r1, r2 = rng.uniform(0.5, 2.0, size=2)
        product = matrix_power(a, r1 * r2)
        semigroup = max(semigroup, _relative(matrix_power(a, r1) @ matrix_power(a, r2), product))
        exponential = max(exponential, _relative(product, scipy.linalg.expm(np.log(r1 * r2) * a)))
    results.append(_result(5, "semigroup defect, 100 random 4×4", semigroup, 1e-10))
    results.append(_result(5, "contour vs exponential", exponential, 1e-10))

    rho = 3.0
    jordan = matrix_power(np.array([[1.0, 1.0], [0.0, 1.0]]), rho)
    closed = rho * np.array([[1.0, np.log(rho)], [0.0, 1.0]])
    results.append(_result(5, "Jordan block closed form", np.max(np.abs(jordan - closed)), 1e-10))
    return results


def admissible_machinery(ctx: RunContext) -> List[CriterionResult]:
    field = crossing_field()
    decomposition = admissible_decomposition(field, np.pi / 2.0, ctx.config.defaults.delta)
    idempotent = partition = commutation = compatibility = 0.0
    for y in decomposition.sample_points(9, fraction=0.9):
        a = field(y)
        Ps = decomposition.projections(y)
        scale = max(1.0, max(np.linalg.norm(P, 2) for P in Ps))
        idempotent = max(idempotent, max(np.linalg.norm(P @ P - P, 2) for P in Ps) / scale ** 2)
        partition = max(partition, np.linalg.norm(sum(Ps) - np.eye(field.rank), 2))
        commutation = max(commutation, max(np.linalg.norm(P @ a - a @ P, 2) for P in Ps) / scale)
        power = matrix_power(a, 4.0)
        blocks = sum(P @ power @ P for P in Ps)
        compatibility = max(compatibility, np.linalg.norm(blocks - power, 2) / (scale ** 2 * np.linalg.norm(power, 2)))
    lo, hi = decomposition.interval
    detail = f"U = ({lo:.4f}, {hi:.4f}), {len(decomposition.centers)} disks"
    return [
        _result(6, "Π² = Π", idempotent, 1e-10, detail),
        _result(6, "ΣΠ = I", partition, 1e-10, detail),
        _result(6, "[Π, a] = 0", commutation, 1e-10, detail),
        _result(6, "ϱ^a = ΣΠϱ^aΠ", compatibility, 1e-10, detail),
    ]


def symbol_estimates(ctx: RunContext) -> List[CriterionResult]:
    with stage("check.symbol_estimates"):
        rows = symbol_estimate_check(crossing_field(), delta=ctx.config.defaults.delta,
                                     fd_step=ctx.config.defaults.fd_step, mapper=ctx.pool.map)
    results = []
    for alpha_zero in (True, False):
        chosen = [r for r in rows if (r.alpha == 0) == alpha_zero]
        excess = max(r.fitted_slope - r.bound for r in chosen)
        name = "α=0 slopes within -β" if alpha_zero else "α>0 slopes within -β + δα"
        results.append(CriterionResult(criterion=7, name=name, passed=all(r.passed for r in chosen),
                                       value=float(excess), threshold=0.1,
                                       detail=f"{sum(r.passed for r in chosen)}/{len(chosen)} rows"))
    return results


def variable_order_norms(ctx: RunContext) -> List[CriterionResult]:
    n = NORM_GRID
    y = uniform_grid(n)
    eta = np.fft.fftfreq(n, d=1.0 / n)
    orders = np.array([1.5, 0.5])
    field = EndomorphismField.diagonal(orders, label="diag(3/2, 1/2)")

    rng = np.random.default_rng(1)
    spectrum = np.zeros((n, 2), dtype=complex)
    low = np.abs(eta) <= n // 4
    spectrum[low] = rng.standard_normal((int(low.sum()), 2)) + 1j * rng.standard_normal((int(low.sum()), 2))
    u = np.fft.ifft(spectrum * n, axis=0)
    uhat = np.fft.fft(u, axis=0) / n
    direct = np.sqrt(np.sum((1.0 + eta[:, None] ** 2) ** orders[None, :] * np.abs(uhat) ** 2))
    computed = varorder_norm(u, field, nodes=ctx.contour_nodes, mapper=ctx.pool.map)
    results = [_result(8, "diagonal order vs weighted Fourier norm", abs(computed - direct) / direct, 1e-12)]

    mode = 3
    single = np.stack([np.exp(1j * mode * y), np.zeros(n)], axis=1)
    exact = (1.0 + mode ** 2) ** (orders[0] / 2.0)
    value = varorder_norm(single, field, nodes=ctx.contour_nodes)
    results.append(_result(8, "single-mode exactness", abs(value - exact) / exact, 1e-12))

    ex = classical_example(1)
    family = classical_family(ex)
    with stage("check.trace_norm"):
        frame = frame_continuation(family, 0.0, y, ex.strip, mapper=ctx.pool.map)
    section = (np.cos(2.0 * y) + 0.5 * np.sin(5.0 * y))[:, None].astype(complex)
    shat = np.fft.fft(section[:, 0]) / n
    h_half = np.sqrt(np.sum((1.0 + eta ** 2) ** 0.5 * np.abs(shat) ** 2))
    trace_norm = trace_sobolev_norm(section, frame, 0.5, nodes=ctx.contour_nodes, mapper=ctx.pool.map)
    results.append(_result(8, "classical m=1 trace norm vs H^1/2", abs(trace_norm - h_half) / h_half, 1e-12))
    return results


def normal_family_identities(ctx: RunContext) -> List[CriterionResult]:
    example = crossing_line_bundle()
    spec = line_bundle_operator(example)
    basis = fiber_basis("circle", 2, example.eigenvalues[0] ** 2)
    y = 0.3
    indicial = normal_family(spec, basis, y, 0.0).same_terms(indicial_operator(spec, basis, y))
    scaled = kappa_conjugate(normal_family(spec, basis, y, 0.75), 2.0).same_terms(normal_family(spec, basis, y, 1.5))
    return [
        CriterionResult(criterion=9, name="A_∧(0) equals the indicial operator", passed=bool(indicial)),
        CriterionResult(criterion=9, name="κ-homogeneity of the normal family", passed=bool(scaled),
                        detail="ϱ=2, η=3/4"),
    ]


def disk_witness(ctx: RunContext) -> List[CriterionResult]:
    with stage("check.disk_witness"):
        ratios = [disk_norm_witness(n).bracket_ratio for n in WITNESS_MODES]
    drift = max(abs(r / ratios[0] - 1.0) for r in ratios)
    graph = disk_graph_ratios(max(WITNESS_MODES))
    n = np.arange(8, max(WITNESS_MODES) + 1)
    slope = float(np.polyfit(np.log(n), np.log(graph[n]), 1)[0])
    return [
        _result(10, "H²_𝒯/H² bracket drift N=8..64", drift, 0.2,
                "ratios " + ", ".join(f"{r:.4f}" for r in ratios)),
        _result(10, "graph-norm ratio growth exponent", slope, 1.0, higher_is_better=True),
    ]


def determinism(ctx: RunContext) -> List[CriterionResult]:
    outputs = []
    for threads in (1, 2, 1):
        sub = replace(_fixture_context(ctx, "classical-m1", PAIRING_GRID), pool=WorkerPool(threads))
        files = {}
        files.update(spectrum_command.run(sub).files)
        files.update(frame_command.run(sub).files)
        outputs.append(files)
    identical = all(o == outputs[0] for o in outputs[1:])
    return [CriterionResult(criterion=11, name="byte-identical outputs across runs and thread counts",
                            passed=bool(identical), detail=", ".join(sorted(outputs[0])))]


CRITERIA: Sequence[Callable[[RunContext], List[CriterionResult]]] = (
    line_bundle_spectrum,
    classical_traces,
    collision_frame,
    pairing_properties,
    matrix_powers,
    admissible_machinery,
    symbol_estimates,
    variable_order_norms,
    normal_family_identities,
    disk_witness,
    determinism,
)


# =============================================================================
# RUNNER
# =============================================================================

def run_criterion(number: int, criterion: Callable[[RunContext], List[CriterionResult]],
                  ctx: RunContext) -> List[CriterionResult]:
    try:
        with stage(f"criterion.{number}"):
            return criterion(ctx)
    except (WedgeTraceError, ValueError, np.linalg.LinAlgError) as e:
        logger.error(f"Criterion {number} ({criterion.__name__}) failed: {e}")
        return [CriterionResult(criterion=number, name=criterion.__name__, passed=False,
                                detail=f"{type(e).__name__}: {e}")]


def run(ctx: RunContext) -> ArtifactSet:
    if ctx.suite not in SUITES:
        raise ValueError(f"unknown suite {ctx.suite!r}; choose from {list(SUITES)}")
    results: List[CriterionResult] = []
    for number, criterion in enumerate(CRITERIA, start=1):
        results.extend(run_criterion(number, criterion, ctx))
    passed = all(r.passed for r in results)
    failed = sorted({r.criterion for r in results if not r.passed})
    if passed:
        logger.info(f"Acceptance suite {ctx.suite}: all {len(results)} checks passed")
    else:
        logger.warning(f"Acceptance suite {ctx.suite}: criteria {failed} failed")
    artifacts = ctx.artifacts()
    artifacts.add_json("acceptance.json", AcceptanceOut(suite=ctx.suite, passed=passed, results=results))
    if not passed:
        artifacts.exit_code = EXIT_ACCEPTANCE
    return artifacts

"""Boundary spectra, trace fibers, adjoint pairings and variable-order norms for wedge operators."""
from .core import Contour, LogGrid, MatrixPolyFamily, Strip, TrigPoly
from .errors import (
    MatchingAmbiguity,
    TruncationWarning,
    WedgeTraceError,
)
from .wedge import (
    CoefficientTable,
    WedgeOperatorSpec,
    ellipticity_sample_check,
    fiber_basis,
    indicial_family,
    indicial_operator,
    kappa_conjugate,
    normal_family,
    wedge_principal_symbol,
)
from .spectra import (
    check_finite_specb,
    collision_points,
    companion_solve,
    contour_solve,
    count_in_contour,
    spectrum_curve,
)
from .trace import (
    apply_indicial,
    assembled_frame,
    dilate_trace_element,
    frame_continuation,
    mellin_quadrature,
    singular_part,
    trace_fiber_basis,
    xdx_endomorphism,
)
from .pairing import (
    Cutoff,
    adjoint_defect,
    adjoint_family,
    cutoff_independence,
    flat_pairing,
    pairing_matrix,
    transition_smoothness,
)
from .varorder import (
    BracketMetric,
    EndomorphismField,
    admissible_decomposition,
    homogeneous_power_symbol,
    matrix_power,
    symbol_estimate_check,
    trace_h1_norm,
    trace_sobolev_norm,
    twisted_homogeneity_check,
    varorder_norm,
)
from .fixtures import (
    classical_family,
    closed_form_spectrum,
    collision_frame_reference,
    disk_norm_witness,
    get_fixture,
    line_bundle_family,
)

__version__ = "0.1.0"

# =============================================================================
# ERRORS AND WARNINGS
# =============================================================================
"""
Exception hierarchy for numerical failures, plus the non-fatal warning types.

Every numerical failure derives from WedgeTraceError and carries a stable
``code`` used by the CLI diagnostics, and a ``context`` dict with the values
that triggered it.
"""

from typing import Any, Dict, Optional


class WedgeTraceError(Exception):
    """Base class for all numerical failures."""

    code = "numerical_failure"

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = dict(context or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, "context": self.context}


# =============================================================================
# CONTOUR / QUADRATURE
# =============================================================================

class NodeOnSingularity(WedgeTraceError):
    """A quadrature node sits on (or numerically at) a singularity."""
    code = "node_on_singularity"


class ContourTooTight(WedgeTraceError):
    """Spectrum lies closer to the contour than the quadrature can resolve."""
    code = "contour_too_tight"


class GridTooCoarse(WedgeTraceError):
    """Radial quadrature has not converged at the requested tolerance."""
    code = "grid_too_coarse"


# =============================================================================
# SPECTRA
# =============================================================================

class DegenerateFamily(WedgeTraceError):
    """The family is singular for every σ (all coefficients vanish or det ≡ 0)."""
    code = "degenerate_family"


class RankDeficientProbe(WedgeTraceError):
    """The moment-matrix rank test is ambiguous or saturated by the probe."""
    code = "rank_deficient_probe"


class IncompleteSpectrum(WedgeTraceError):
    """Local refinement recovered fewer roots than the argument principle counts."""
    code = "incomplete_spectrum"


# =============================================================================
# TRACE
# =============================================================================

class PoleSeparationFailure(WedgeTraceError):
    """Two poles are too close to be separated by residue circles."""
    code = "pole_separation_failure"


class RankLoss(WedgeTraceError):
    """A frame lost rank at a grid point."""
    code = "rank_loss"


class NotInvariant(WedgeTraceError):
    """x∂_x maps a basis element outside the span of the basis."""
    code = "not_invariant"


# =============================================================================
# PAIRING
# =============================================================================

class SingularPairing(WedgeTraceError):
    """The pairing matrix is not invertible within the condition bound."""
    code = "singular_pairing"


# =============================================================================
# VARIABLE ORDER
# =============================================================================

class ClusteringImpossible(WedgeTraceError):
    """The spectrum cannot be covered by disjoint disks of diameter < δ."""
    code = "clustering_impossible"


class AliasingError(WedgeTraceError):
    """Sampled data carries energy in the top octave of frequencies."""
    code = "aliasing"


class FiniteDifferenceInstability(WedgeTraceError):
    """Richardson levels disagree by more than the allowed fraction."""
    code = "fd_instability"


# =============================================================================
# FIXTURES
# =============================================================================

class BranchAmbiguity(WedgeTraceError):
    """A coefficient winds around (or touches) zero, so √φ has no global branch."""
    code = "branch_ambiguity"


class GramConditioning(WedgeTraceError):
    """A Gram matrix is too ill-conditioned even after orthogonalization."""
    code = "gram_conditioning"


# =============================================================================
# WARNINGS (recorded, never fatal)
# =============================================================================

class TruncationWarning(UserWarning):
    """Fiber operators leak outside the truncated mode span."""


class MatchingAmbiguity(UserWarning):
    """Nearest-neighbour spectrum matching was ambiguous at a grid point."""


# =============================================================================
# EXIT CODES
# =============================================================================

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

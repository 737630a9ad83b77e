"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` so the CLI can emit
structured error records without string matching.
"""

from __future__ import annotations


class EDRError(ValueError):
    """Base class for every domain error raised by this package."""

    code = "edr_error"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


class ParseError(EDRError):
    code = "parse_error"


class OrderingError(EDRError):
    code = "ordering_error"


class DomainError(EDRError):
    code = "domain_error"


class EmptyResultError(EDRError):
    code = "empty_result"


class InsufficientDataError(EDRError):
    code = "insufficient_data"


class AlignmentError(EDRError):
    code = "alignment_error"


class UndefinedProspectError(EDRError):
    code = "undefined_prospect"


class UndefinedBetaError(EDRError):
    code = "undefined_beta"


class NoRealSolutionError(EDRError):
    code = "no_real_solution"


class SingularSlopeError(EDRError):
    code = "singular_slope"


class CalibrationRangeError(EDRError):
    code = "calibration_out_of_range"


class DegenerateReferenceError(EDRError):
    code = "degenerate_reference"


class NoOptimumError(EDRError):
    code = "no_optimum"


class NoEquilibriumError(EDRError):
    code = "no_equilibrium"


class SingularDesignError(EDRError):
    code = "singular_design"


class DegenerateTestError(EDRError):
    code = "degenerate_test"

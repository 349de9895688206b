"""Exception types shared by the library and the command line front end."""

from __future__ import annotations


class InterpNormError(Exception):
    """Base class; ``code`` is a short machine-readable tag."""

    code = "error"


class IndexUnstable(InterpNormError):
    code = "index_unstable"


class NotAdmissible(InterpNormError):
    code = "not_admissible"


class QuadratureNonconvergent(InterpNormError):
    code = "quadrature_nonconvergent"


class NotNonnegative(InterpNormError):
    code = "not_nonnegative"


class NotQuasiconcave(InterpNormError):
    code = "not_quasiconcave"


class OverflowRange(InterpNormError):
    code = "overflow_range"


class HypothesisViolated(InterpNormError):
    code = "hypothesis_violated"


class IndicesViolateHypothesis(HypothesisViolated):
    code = "indices_violate_hypothesis"


class CaseGateFailed(InterpNormError):
    code = "case_gate_failed"


class Triviality(InterpNormError):
    code = "triviality"


class SpecParseError(InterpNormError, ValueError):
    code = "parse_error"

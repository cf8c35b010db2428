"""Condition DOI sets, threshold checks with the 2-of-3 rule, threshold scaling."""

from __future__ import annotations

import enum
from collections.abc import Iterable
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .model import (
    Condition,
    Doi,
    EvaluationOutcome,
    IndicatorTriple,
    Role,
    ThresholdSet,
)

__all__ = [
    "Comparison",
    "ConditionSets",
    "CandidateEvaluation",
    "InvalidRatio",
    "RECONCILED_THRESHOLDS",
    "PRINTED_THRESHOLDS",
    "build_condition_sets",
    "evaluate",
    "scale_thresholds",
]

# PRINTED_THRESHOLDS is the same pair of rows with the role labels swapped,
# kept selectable so both readings can be compared.
RECONCILED_THRESHOLDS = {
    Role.FULL: ThresholdSet(Role.FULL, 8, 216, 8),
    Role.ASSOCIATE: ThresholdSet(Role.ASSOCIATE, 5, 118, 6),
}
PRINTED_THRESHOLDS = {
    Role.ASSOCIATE: ThresholdSet(Role.ASSOCIATE, 8, 216, 8),
    Role.FULL: ThresholdSet(Role.FULL, 5, 118, 6),
}


class InvalidRatio(ValueError):
    pass


class Comparison(enum.Enum):
    GREATER_EQUAL = "ge"
    STRICTLY_GREATER = "gt"

    @classmethod
    def parse(cls, text: str) -> Comparison:
        key = text.strip().lower()
        if key in ("ge", ">=", "greater-equal", "greaterequal"):
            return cls.GREATER_EQUAL
        if key in ("gt", ">", "strictly-greater", "strictlygreater"):
            return cls.STRICTLY_GREATER
        raise ValueError(f"unknown comparison {text!r}")

    def passes(self, value: float, threshold: int) -> bool:
        if self is Comparison.GREATER_EQUAL:
            return value >= threshold
        return value > threshold


@dataclass(frozen=True)
class ConditionSets:
    ccv: frozenset[Doi]
    cdblp: frozenset[Doi]
    cu: frozenset[Doi]

    def for_condition(self, condition: Condition) -> frozenset[Doi]:
        return {Condition.CCV: self.ccv, Condition.CDBLP: self.cdblp, Condition.CU: self.cu}[
            condition
        ]


@dataclass(frozen=True)
class CandidateEvaluation:
    candidate_id: str
    role: Role
    condition: Condition
    triple: IndicatorTriple
    outcome: EvaluationOutcome


def build_condition_sets(cv_dois: Iterable[Doi], dblp_dois: Iterable[Doi]) -> ConditionSets:
    ccv = frozenset(cv_dois)
    cdblp = frozenset(dblp_dois)
    return ConditionSets(ccv, cdblp, ccv | cdblp)


def evaluate(
    triple: IndicatorTriple,
    thresholds: ThresholdSet,
    comparison: Comparison = Comparison.GREATER_EQUAL,
) -> EvaluationOutcome:
    return EvaluationOutcome(
        pass_a=comparison.passes(triple.a, thresholds.t_a),
        pass_b=comparison.passes(triple.b, thresholds.t_b),
        pass_c=comparison.passes(triple.c, thresholds.t_c),
    )


def _round_half_up(value: Decimal) -> int:
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def scale_thresholds(thresholds: ThresholdSet, ratio: float) -> ThresholdSet:
    """Multiply every threshold by ``ratio`` and round to the nearest integer.

    Halves round up. The product is taken in decimal arithmetic on the ratio's
    shortest repr, so 5 * 0.7 gives 3.5 and rounds to 4 rather than 3.
    """
    if not (0 < ratio <= 1):
        raise InvalidRatio(f"ratio must be in (0, 1], got {ratio!r}")
    factor = Decimal(repr(float(ratio)))
    return ThresholdSet(
        thresholds.role,
        _round_half_up(thresholds.t_a * factor),
        _round_half_up(thresholds.t_b * factor),
        _round_half_up(thresholds.t_c * factor),
    )

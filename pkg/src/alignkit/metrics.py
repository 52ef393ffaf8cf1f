"""Baseline and overall alignment vectors, their norms, and verdicts.

A party's log-relative allocation decomposes into a field mean, an individual
deviation, and (at the resolution stage only) a negotiation adjustment. The
baseline difference between an analyst and a consumer, the net movement the
negotiation produced, and the post-negotiation difference are all vectors
with a structural zero at the reference principle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .errors import DimensionMismatchError
from .principles import LogRelativeVector, Role, Stage

DEFAULT_EPSILON = 0.1
DEFAULT_P = 2.0
DECOMPOSITION_ATOL = 1e-12


class AlignmentKind(str, Enum):
    """Which difference an alignment vector measures."""

    BASELINE = "baseline"
    RESIDUAL = "residual"
    OVERALL = "overall"


@dataclass(frozen=True)
class PartyParams:
    """One party's mean-model parameters on the log-relative scale."""

    role: Role
    field_id: int
    field_mean: LogRelativeVector
    individual_deviation: LogRelativeVector
    negotiation_adjustment: LogRelativeVector

    def __post_init__(self) -> None:
        object.__setattr__(self, "role", Role(self.role))
        if self.field_id < 1:
            raise ValueError(f"field_id must be >= 1, got {self.field_id}")
        for vector in (self.individual_deviation, self.negotiation_adjustment):
            if (
                vector.size != self.field_mean.size
                or vector.reference_index != self.field_mean.reference_index
            ):
                raise DimensionMismatchError(
                    "field_mean, individual_deviation, and negotiation_adjustment "
                    "must share size and reference index"
                )

    @property
    def size(self) -> int:
        return self.field_mean.size

    @property
    def reference_index(self) -> int:
        return self.field_mean.reference_index


@dataclass(frozen=True)
class AlignmentVector:
    """Per-principle allocation difference with a structural zero at the reference."""

    kind: AlignmentKind
    values: tuple[float, ...]
    reference_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", AlignmentKind(self.kind))
        values = tuple(float(v) for v in self.values)
        if any(not math.isfinite(v) for v in values):
            raise ValueError("alignment components must be finite")
        if not 0 <= self.reference_index < len(values):
            raise ValueError(
                f"reference_index {self.reference_index} out of range for "
                f"{len(values)} components"
            )
        if values[self.reference_index] != 0.0:
            raise ValueError(
                "reference component of an alignment vector must be exactly 0"
            )
        values = (
            values[: self.reference_index]
            + (0.0,)
            + values[self.reference_index + 1 :]
        )
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return len(self.values)

    def scale(self, factor: float, kind: AlignmentKind | None = None) -> "AlignmentVector":
        return AlignmentVector(
            kind or self.kind,
            tuple(factor * v for v in self.values),
            self.reference_index,
        )

    def as_log_relative(self) -> LogRelativeVector:
        return LogRelativeVector(self.values, self.reference_index)


@dataclass(frozen=True)
class AlignmentVerdict:
    """Strong/weak alignment decision against a threshold epsilon."""

    strong: bool
    weak: bool
    sup_norm: float
    p_norm: float
    epsilon: float
    p: float


def _check_same_shape(a, b) -> None:
    if a.size != b.size or a.reference_index != b.reference_index:
        raise DimensionMismatchError(
            f"size {a.size} ref {a.reference_index} vs size {b.size} "
            f"ref {b.reference_index}"
        )


def party_log_relative(party: PartyParams, stage: Stage) -> LogRelativeVector:
    """Mean-model log-relative allocation: field mean + deviation, plus the
    negotiation adjustment at the resolution stage only."""
    combined = party.field_mean.add(party.individual_deviation)
    if Stage(stage) is Stage.RESOLUTION:
        combined = combined.add(party.negotiation_adjustment)
    return combined


def baseline_alignment(analyst: PartyParams, consumer: PartyParams) -> AlignmentVector:
    """Pre-negotiation difference between analyst and consumer allocations.

    Computed from the (field mean, deviation) decomposition and cross-checked
    against the difference of the two parties' baseline log-relative values.
    """
    if analyst.role is not Role.ANALYST:
        raise ValueError(f"first party must have the analyst role, got {analyst.role}")
    if consumer.role is not Role.CONSUMER:
        raise ValueError(
            f"second party must have the consumer role, got {consumer.role}"
        )
    _check_same_shape(analyst.field_mean, consumer.field_mean)
    decomposed = tuple(
        (lam_a - lam_c) + (dev_a - dev_c)
        for lam_a, lam_c, dev_a, dev_c in zip(
            analyst.field_mean.values,
            consumer.field_mean.values,
            analyst.individual_deviation.values,
            consumer.individual_deviation.values,
        )
    )
    direct = party_log_relative(analyst, Stage.BASELINE).subtract(
        party_log_relative(consumer, Stage.BASELINE)
    )
    drift = max(abs(a - b) for a, b in zip(decomposed, direct.values))
    if drift > DECOMPOSITION_ATOL:
        raise ArithmeticError(
            f"baseline decomposition drifted {drift:g} from the direct difference"
        )
    return AlignmentVector(
        AlignmentKind.BASELINE, decomposed, analyst.reference_index
    )


def overall_alignment(
    baseline: AlignmentVector,
    analyst_adjustment: LogRelativeVector,
    consumer_adjustment: LogRelativeVector,
) -> tuple[AlignmentVector, AlignmentVector]:
    """Post-negotiation difference and the residual movement that produced it.

    Returns (overall, residual) with overall = baseline + residual holding
    exactly, component by component.
    """
    _check_same_shape(baseline, analyst_adjustment)
    _check_same_shape(baseline, consumer_adjustment)
    residual_values = tuple(
        a - c for a, c in zip(analyst_adjustment.values, consumer_adjustment.values)
    )
    overall_values = tuple(
        b + r for b, r in zip(baseline.values, residual_values)
    )
    reference = baseline.reference_index
    return (
        AlignmentVector(AlignmentKind.OVERALL, overall_values, reference),
        AlignmentVector(AlignmentKind.RESIDUAL, residual_values, reference),
    )


def sup_norm(values: Sequence[float]) -> float:
    """Largest absolute component."""
    return max(abs(float(v)) for v in values)


def averaged_p_norm(values: Sequence[float], p: float) -> float:
    """The (1/K)-averaged power mean ((1/K) sum |v|^p)^(1/p) over all K components.

    The structural zero at the reference participates in the average. Scaled
    by the largest component so large p cannot underflow.
    """
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    k = len(values)
    if k == 0:
        raise ValueError("cannot take a norm of an empty vector")
    peak = sup_norm(values)
    if peak == 0.0:
        return 0.0
    scaled = math.fsum((abs(float(v)) / peak) ** p for v in values) / k
    return peak * scaled ** (1.0 / p)


def evaluate_alignment(
    overall: AlignmentVector, epsilon: float, p: float = DEFAULT_P
) -> AlignmentVerdict:
    """Full verdict: strict sup-norm test (strong) and strict averaged
    p-norm test (weak) against the same epsilon."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    supremum = sup_norm(overall.values)
    averaged = averaged_p_norm(overall.values, p)
    return AlignmentVerdict(
        strong=supremum < epsilon,
        weak=averaged < epsilon,
        sup_norm=supremum,
        p_norm=averaged,
        epsilon=epsilon,
        p=float(p),
    )


def strong_check(
    overall: AlignmentVector, epsilon: float, p: float = DEFAULT_P
) -> AlignmentVerdict:
    """Verdict whose strong field is the sup-norm test at strict '<'."""
    return evaluate_alignment(overall, epsilon, p)


def weak_check(overall: AlignmentVector, epsilon: float, p: float) -> AlignmentVerdict:
    """Verdict whose weak field is the averaged p-norm test at strict '<'."""
    return evaluate_alignment(overall, epsilon, p)


def group_baseline_alignment(
    analyst: PartyParams, consumers: Sequence[PartyParams]
) -> AlignmentVector:
    """Baseline difference against a group: the per-consumer average of the
    pairwise differences. A single consumer reduces to the pairwise case."""
    if not consumers:
        raise ValueError("at least one consumer is required")
    pairwise = [baseline_alignment(analyst, consumer) for consumer in consumers]
    count = len(pairwise)
    values = tuple(
        math.fsum(vector.values[k] for vector in pairwise) / count
        for k in range(analyst.size)
    )
    return AlignmentVector(AlignmentKind.BASELINE, values, analyst.reference_index)


def group_overall_alignment(
    group_baseline: AlignmentVector,
    analyst_adjustment: LogRelativeVector,
    consumer_adjustments: Sequence[LogRelativeVector],
) -> AlignmentVector:
    """Post-negotiation difference against a group: baseline plus the analyst
    adjustment minus the mean consumer adjustment."""
    if not consumer_adjustments:
        raise ValueError("at least one consumer adjustment is required")
    _check_same_shape(group_baseline, analyst_adjustment)
    for adjustment in consumer_adjustments:
        _check_same_shape(group_baseline, adjustment)
    count = len(consumer_adjustments)
    mean_consumer = tuple(
        math.fsum(adj.values[k] for adj in consumer_adjustments) / count
        for k in range(group_baseline.size)
    )
    values = tuple(
        b + (a - c)
        for b, a, c in zip(
            group_baseline.values, analyst_adjustment.values, mean_consumer
        )
    )
    return AlignmentVector(
        AlignmentKind.OVERALL, values, group_baseline.reference_index
    )

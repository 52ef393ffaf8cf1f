"""Negotiation strategies, the improvement law, and party sampling.

Strategies describe how the two parties move at the resolution stage as a
function of their baseline difference: one side absorbing it entirely, both
sides conceding bounded fractions, or a scalar-scaled family whose overall
outcome shrinks (or grows) the baseline by a factor |1 - alpha|.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .metrics import (
    DEFAULT_EPSILON,
    DEFAULT_P,
    AlignmentKind,
    AlignmentVector,
    AlignmentVerdict,
    PartyParams,
    averaged_p_norm,
    baseline_alignment,
    evaluate_alignment,
    group_baseline_alignment,
    overall_alignment,
)
from .principles import LogRelativeVector, Role


class StrategyKind(str, Enum):
    """Named negotiation profiles plus the scalar-scaled family."""

    ACCOMMODATING_ANALYST_INTRANSIGENT_CONSUMER = (
        "accommodating_analyst_intransigent_consumer"
    )
    INTRANSIGENT_ANALYST_ACCOMMODATING_CONSUMER = (
        "intransigent_analyst_accommodating_consumer"
    )
    DESIGN_FOCUSED = "design_focused"
    ALPHA_SCALED = "alpha_scaled"


@dataclass(frozen=True)
class NegotiationStrategy:
    """A strategy kind plus the parameters that kind admits.

    Concessions apply to design_focused only; alpha applies to alpha_scaled
    only. Supplying a parameter to a strategy that does not use it is an
    error, so outcomes are never silently misconfigured.
    """

    kind: StrategyKind
    analyst_concession: float | None = None
    consumer_concession: float | None = None
    alpha: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        concessions = (self.analyst_concession, self.consumer_concession)
        if self.kind is StrategyKind.DESIGN_FOCUSED:
            if self.alpha is not None:
                raise ValueError("alpha is only valid for alpha_scaled strategies")
            if any(c is None for c in concessions):
                raise ValueError("design_focused requires both concessions")
            for c in concessions:
                if not 0.0 <= float(c) <= 1.0:
                    raise ValueError(f"concessions must lie in [0, 1], got {c}")
        elif self.kind is StrategyKind.ALPHA_SCALED:
            if any(c is not None for c in concessions):
                raise ValueError("concessions are only valid for design_focused")
            if self.alpha is None or float(self.alpha) < 0.0:
                raise ValueError(f"alpha_scaled requires alpha >= 0, got {self.alpha}")
        else:
            if self.alpha is not None or any(c is not None for c in concessions):
                raise ValueError(
                    f"{self.kind.value} takes no parameters; got "
                    f"concessions={concessions}, alpha={self.alpha}"
                )

    @classmethod
    def accommodating_analyst(cls) -> "NegotiationStrategy":
        return cls(StrategyKind.ACCOMMODATING_ANALYST_INTRANSIGENT_CONSUMER)

    @classmethod
    def intransigent_analyst(cls) -> "NegotiationStrategy":
        return cls(StrategyKind.INTRANSIGENT_ANALYST_ACCOMMODATING_CONSUMER)

    @classmethod
    def design_focused(
        cls, analyst_concession: float = 0.5, consumer_concession: float = 0.5
    ) -> "NegotiationStrategy":
        return cls(
            StrategyKind.DESIGN_FOCUSED,
            analyst_concession=analyst_concession,
            consumer_concession=consumer_concession,
        )

    @classmethod
    def alpha_scaled(cls, alpha: float) -> "NegotiationStrategy":
        return cls(StrategyKind.ALPHA_SCALED, alpha=alpha)


@dataclass(frozen=True)
class NegotiationOutcome:
    """Record of one negotiated resolution: adjustments, differences, verdict."""

    analyst_adjustment: LogRelativeVector
    consumer_adjustment: LogRelativeVector
    baseline: AlignmentVector
    overall: AlignmentVector
    improved: bool
    verdict: AlignmentVerdict

    def __post_init__(self) -> None:
        for base, adj_a, adj_c, total in zip(
            self.baseline.values,
            self.analyst_adjustment.values,
            self.consumer_adjustment.values,
            self.overall.values,
        ):
            if total != base + (adj_a - adj_c):
                raise ValueError(
                    "overall difference must equal baseline plus net adjustment "
                    "exactly"
                )


def negotiate(
    analyst: PartyParams,
    consumer: PartyParams,
    strategy: NegotiationStrategy,
    epsilon: float = DEFAULT_EPSILON,
    p: float = DEFAULT_P,
) -> NegotiationOutcome:
    """Apply a strategy to the pair's baseline difference.

    An accommodating analyst absorbs the whole difference; an intransigent
    analyst forces the consumer to; design_focused moves each party by its
    concession fraction; alpha_scaled splits an alpha-sized reversal evenly.
    """
    baseline = baseline_alignment(analyst, consumer)
    zero = LogRelativeVector.zeros(baseline.size, baseline.reference_index)
    kind = strategy.kind
    if kind is StrategyKind.ACCOMMODATING_ANALYST_INTRANSIGENT_CONSUMER:
        analyst_adjustment = baseline.scale(-1.0).as_log_relative()
        consumer_adjustment = zero
    elif kind is StrategyKind.INTRANSIGENT_ANALYST_ACCOMMODATING_CONSUMER:
        analyst_adjustment = zero
        consumer_adjustment = baseline.as_log_relative()
    elif kind is StrategyKind.DESIGN_FOCUSED:
        analyst_adjustment = baseline.scale(
            -float(strategy.analyst_concession)
        ).as_log_relative()
        consumer_adjustment = baseline.scale(
            float(strategy.consumer_concession)
        ).as_log_relative()
    elif kind is StrategyKind.ALPHA_SCALED:
        half = float(strategy.alpha) / 2.0
        analyst_adjustment = baseline.scale(-half).as_log_relative()
        consumer_adjustment = baseline.scale(half).as_log_relative()
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unsupported strategy kind {kind!r}")
    overall, residual = overall_alignment(
        baseline, analyst_adjustment, consumer_adjustment
    )
    return NegotiationOutcome(
        analyst_adjustment=analyst_adjustment,
        consumer_adjustment=consumer_adjustment,
        baseline=baseline,
        overall=overall,
        improved=improvement_check(baseline, residual),
        verdict=evaluate_alignment(overall, epsilon, p),
    )


def improvement_check(baseline: AlignmentVector, residual: AlignmentVector) -> bool:
    """True when the averaged 2-norm after the residual movement does not
    exceed the baseline's (non-strict, so a full reversal still counts)."""
    if baseline.size != residual.size:
        raise ValueError(
            f"baseline has {baseline.size} components, residual {residual.size}"
        )
    adjusted = tuple(b + r for b, r in zip(baseline.values, residual.values))
    return averaged_p_norm(adjusted, 2.0) <= averaged_p_norm(baseline.values, 2.0)


def optimal_adjustment(baseline: AlignmentVector) -> AlignmentVector:
    """The residual that zeroes the overall difference: the exact negation."""
    return baseline.scale(-1.0, AlignmentKind.RESIDUAL)


def sample_party(
    field_mean: LogRelativeVector,
    deviation_sd: float,
    seed,
    role: Role = Role.ANALYST,
    field_id: int = 1,
) -> PartyParams:
    """Draw a party: Gaussian individual deviation per non-reference component,
    zero at the reference, no negotiation adjustment yet.

    deviation_sd = 0 is the degenerate party that sits exactly on its field
    mean.
    """
    if deviation_sd < 0:
        raise ValueError(f"deviation_sd must be >= 0, got {deviation_sd}")
    rng = np.random.default_rng(seed)
    reference = field_mean.reference_index
    draws = iter(rng.normal(0.0, deviation_sd, size=field_mean.size - 1))
    deviation = tuple(
        0.0 if k == reference else float(next(draws)) for k in range(field_mean.size)
    )
    return PartyParams(
        role=role,
        field_id=field_id,
        field_mean=field_mean,
        individual_deviation=LogRelativeVector(deviation, reference),
        negotiation_adjustment=LogRelativeVector.zeros(field_mean.size, reference),
    )


def large_audience_baseline(
    analyst: PartyParams,
    field_mean: LogRelativeVector,
    deviation_sd: float,
    audience_size: int,
    seed,
) -> AlignmentVector:
    """Baseline difference against a same-field audience of the given size.

    The field means cancel, so the result is the analyst's deviation minus
    the audience-average deviation; the audience term shrinks like
    deviation_sd / sqrt(audience_size).
    """
    if analyst.field_mean != field_mean:
        raise ValueError("analyst and audience must share the same field mean")
    if audience_size < 1:
        raise ValueError(f"audience_size must be >= 1, got {audience_size}")
    if deviation_sd < 0:
        raise ValueError(f"deviation_sd must be >= 0, got {deviation_sd}")
    rng = np.random.default_rng(seed)
    reference = field_mean.reference_index
    size = field_mean.size
    audience = rng.normal(0.0, deviation_sd, size=(audience_size, size - 1))
    audience_mean = audience.mean(axis=0)
    free = iter(range(size - 1))
    values = tuple(
        0.0
        if k == reference
        else analyst.individual_deviation.values[k] - float(audience_mean[next(free)])
        for k in range(size)
    )
    return AlignmentVector(AlignmentKind.BASELINE, values, reference)


def sampled_group_baseline(
    analyst: PartyParams,
    field_mean: LogRelativeVector,
    deviation_sd: float,
    audience_size: int,
    seed,
) -> AlignmentVector:
    """Reference path for large_audience_baseline: sample every audience
    member explicitly and average the pairwise differences."""
    seeds = np.random.SeedSequence(seed).spawn(audience_size)
    consumers = [
        sample_party(
            field_mean,
            deviation_sd,
            child,
            role=Role.CONSUMER,
            field_id=analyst.field_id,
        )
        for child in seeds
    ]
    return group_baseline_alignment(analyst, consumers)

"""Principle sets, simplex allocations, and the Dirichlet machinery behind them.

Allocations live on the K-simplex: one weight per design principle, summing
to 1. Each party's randomness is a Dirichlet draw whose concentration vector
encodes both the mean allocation (values / total) and, through the total, how
tightly draws cluster around it. Log-relative vectors express allocations as
natural-log ratios against a designated reference principle, which is the
scale on which field means, deviations, and negotiation adjustments combine
additively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import BoundaryAllocationError, DimensionMismatchError

SIMPLEX_ATOL = 1e-9
TOTAL_RTOL = 1e-12
ROUND_TRIP_ATOL = 1e-9
LOG_RELATIVE_LIMIT = 700.0

# Built-in six-principle set, in the ordering used for elicitation.
DEFAULT_PRINCIPLE_NAMES = (
    "clarity",
    "exhaustive",
    "data-matching",
    "reproducibility",
    "second-order",
    "skeptical",
)


class Stage(str, Enum):
    """Elicitation stage an allocation belongs to."""

    BASELINE = "baseline"
    RESOLUTION = "resolution"


class Role(str, Enum):
    """Which side of the pairing a party sits on."""

    ANALYST = "analyst"
    CONSUMER = "consumer"


@dataclass(frozen=True)
class PrincipleSet:
    """Ordered design principles plus the reference principle used for log ratios."""

    names: tuple[str, ...]
    reference_index: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        if len(self.names) < 2:
            raise ValueError(f"need at least 2 principles, got {len(self.names)}")
        if any(not name for name in self.names):
            raise ValueError("principle names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError("principle names must be distinct")
        if not 0 <= self.reference_index < len(self.names):
            raise ValueError(
                f"reference_index {self.reference_index} out of range for "
                f"{len(self.names)} principles"
            )

    @property
    def size(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown principle {name!r}") from None


def default_principles(reference_index: int = 0) -> PrincipleSet:
    """The built-in six-principle set with a configurable reference."""
    return PrincipleSet(DEFAULT_PRINCIPLE_NAMES, reference_index)


@dataclass(frozen=True)
class ConcentrationVector:
    """Positive per-principle concentration parameters and their total.

    The total is carried explicitly because it is meaningful on its own (the
    overall resource level, which inversely controls allocation variance); it
    must agree with the component sum.
    """

    values: tuple[float, ...]
    total: float

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "total", float(self.total))
        if len(values) < 1:
            raise ValueError("concentration vector must not be empty")
        if any(not math.isfinite(v) or v <= 0.0 for v in values):
            raise ValueError("concentration parameters must be positive and finite")
        component_sum = math.fsum(values)
        scale = max(abs(self.total), abs(component_sum))
        if abs(self.total - component_sum) > TOTAL_RTOL * scale:
            raise ValueError(
                f"total {self.total!r} does not match component sum {component_sum!r}"
            )

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "ConcentrationVector":
        vals = tuple(float(v) for v in values)
        return cls(vals, math.fsum(vals))

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class AllocationVector:
    """A point on the K-simplex: one party's realized allocations at one stage.

    Components must be non-negative and sum to 1 within SIMPLEX_ATOL. Zero
    components are representable so that boundary survey answers can be
    carried; every sampling or moment operation in this module produces
    strictly interior vectors, and log-ratio operations reject zeros unless
    smoothing is explicitly enabled.
    """

    weights: tuple[float, ...]
    stage: Stage = Stage.BASELINE

    def __post_init__(self) -> None:
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "stage", Stage(self.stage))
        if len(weights) < 1:
            raise ValueError("allocation vector must not be empty")
        if any(not math.isfinite(w) or w < 0.0 for w in weights):
            raise ValueError("allocation weights must be finite and non-negative")
        total = math.fsum(weights)
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"allocation weights must sum to 1, got {total!r}")

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def is_interior(self) -> bool:
        return all(w > 0.0 for w in self.weights)


@dataclass(frozen=True)
class LogRelativeVector:
    """Natural-log allocation ratios against the reference principle.

    The component at the reference index is structurally zero; all additive
    model parameters (field means, deviations, adjustments) share this form.
    """

    values: tuple[float, ...]
    reference_index: int

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if len(values) < 1:
            raise ValueError("log-relative vector must not be empty")
        if any(not math.isfinite(v) for v in values):
            raise ValueError("log-relative components must be finite")
        if not 0 <= self.reference_index < len(values):
            raise ValueError(
                f"reference_index {self.reference_index} out of range for "
                f"{len(values)} components"
            )
        if values[self.reference_index] != 0.0:
            raise ValueError(
                "reference component must be exactly 0, got "
                f"{values[self.reference_index]!r}"
            )
        # normalize -0.0 so serialized output is stable
        values = (
            values[: self.reference_index]
            + (0.0,)
            + values[self.reference_index + 1 :]
        )
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return len(self.values)

    @classmethod
    def zeros(cls, size: int, reference_index: int = 0) -> "LogRelativeVector":
        return cls((0.0,) * size, reference_index)

    def _check_compatible(self, other: "LogRelativeVector") -> None:
        if self.size != other.size or self.reference_index != other.reference_index:
            raise DimensionMismatchError(
                f"incompatible log-relative vectors: size {self.size} ref "
                f"{self.reference_index} vs size {other.size} ref {other.reference_index}"
            )

    def add(self, other: "LogRelativeVector") -> "LogRelativeVector":
        self._check_compatible(other)
        return LogRelativeVector(
            tuple(a + b for a, b in zip(self.values, other.values)),
            self.reference_index,
        )

    def subtract(self, other: "LogRelativeVector") -> "LogRelativeVector":
        self._check_compatible(other)
        return LogRelativeVector(
            tuple(a - b for a, b in zip(self.values, other.values)),
            self.reference_index,
        )

    def scale(self, factor: float) -> "LogRelativeVector":
        return LogRelativeVector(
            tuple(factor * v for v in self.values), self.reference_index
        )


def mean_allocation(concentration: ConcentrationVector) -> AllocationVector:
    """Mean of the allocation model: component k receives values[k] / total."""
    weights = tuple(v / concentration.total for v in concentration.values)
    return AllocationVector(weights, Stage.BASELINE)


def smooth_weights(weights: Sequence[float], constant: float) -> tuple[float, ...]:
    """Pull boundary weights into the simplex interior: w -> (w + c) / (1 + K*c)."""
    if constant < 0:
        raise ValueError(f"smoothing constant must be >= 0, got {constant}")
    k = len(weights)
    denom = 1.0 + k * constant
    return tuple((float(w) + constant) / denom for w in weights)


def log_relative(
    allocation: AllocationVector | Sequence[float],
    reference_index: int,
    smoothing: float = 0.0,
) -> LogRelativeVector:
    """Log ratios of an allocation against its reference component.

    Zero weights are an error unless a positive smoothing constant is given,
    in which case weights are first smoothed into the interior.
    """
    if isinstance(allocation, AllocationVector):
        weights: tuple[float, ...] = allocation.weights
    else:
        weights = tuple(float(w) for w in allocation)
    if not 0 <= reference_index < len(weights):
        raise ValueError(
            f"reference_index {reference_index} out of range for {len(weights)} weights"
        )
    if smoothing > 0.0:
        weights = smooth_weights(weights, smoothing)
    if any(w <= 0.0 for w in weights):
        raise BoundaryAllocationError(
            "zero allocation has no log ratio; enable smoothing to handle "
            "boundary survey answers"
        )
    reference = weights[reference_index]
    values = [math.log(w / reference) for w in weights]
    values[reference_index] = 0.0
    return LogRelativeVector(tuple(values), reference_index)


def from_log_relative(psi: LogRelativeVector, total: float) -> ConcentrationVector:
    """Invert the log-relative map: softmax the ratios, then scale by the total.

    This is the unique inverse of log_relative(mean_allocation(.)) for a given
    total; components with |value| > LOG_RELATIVE_LIMIT are rejected before
    exponentiation can overflow.
    """
    if not math.isfinite(total) or total <= 0.0:
        raise ValueError(f"total must be positive and finite, got {total}")
    if any(abs(v) > LOG_RELATIVE_LIMIT for v in psi.values):
        raise ValueError(
            f"log-relative component exceeds +/-{LOG_RELATIVE_LIMIT:g}; "
            "refusing to exponentiate"
        )
    exps = [math.exp(v) for v in psi.values]
    denom = math.fsum(exps)
    return ConcentrationVector.from_values(total * e / denom for e in exps)


def re_reference(psi: LogRelativeVector, new_reference: int) -> LogRelativeVector:
    """Express the same allocation ratios against a different reference principle."""
    if not 0 <= new_reference < psi.size:
        raise ValueError(
            f"reference index {new_reference} out of range for {psi.size} components"
        )
    offset = psi.values[new_reference]
    values = [v - offset for v in psi.values]
    values[new_reference] = 0.0
    return LogRelativeVector(tuple(values), new_reference)


def sample_allocation_matrix(
    concentration: ConcentrationVector, count: int, seed
) -> np.ndarray:
    """Draw `count` allocations as a (count, K) array of simplex rows.

    Draws K independent Gamma(alpha_k, 1) deviates per row and normalizes.
    Identical seeds produce identical matrices; rows underflowing to exactly
    zero are clamped to the smallest positive normal so every row stays
    strictly interior.
    """
    if count < 1:
        raise ValueError(f"sample count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    draws = rng.gamma(
        shape=np.asarray(concentration.values, dtype=float),
        scale=1.0,
        size=(count, concentration.size),
    )
    draws = np.maximum(draws, np.finfo(float).tiny)
    return draws / draws.sum(axis=1, keepdims=True)


def sample_allocations(
    concentration: ConcentrationVector,
    count: int,
    seed,
    stage: Stage = Stage.BASELINE,
) -> list[AllocationVector]:
    """Draw `count` independent allocations from the Dirichlet model."""
    matrix = sample_allocation_matrix(concentration, count, seed)
    return [AllocationVector(tuple(row), stage) for row in matrix]


def marginal_beta_params(
    concentration: ConcentrationVector, index: int
) -> tuple[float, float]:
    """Shape parameters of the single-component marginal: (a_k, a_0 - a_k)."""
    if not 0 <= index < concentration.size:
        raise IndexError(
            f"principle index {index} out of range for {concentration.size} components"
        )
    first = concentration.values[index]
    return first, concentration.total - first


def dirichlet_mean(concentration: ConcentrationVector) -> tuple[float, ...]:
    """Closed-form per-component mean: values / total."""
    return tuple(v / concentration.total for v in concentration.values)


def dirichlet_variance(concentration: ConcentrationVector) -> tuple[float, ...]:
    """Closed-form per-component variance: mu*(1-mu) / (total+1)."""
    total = concentration.total
    return tuple(
        (v / total) * (1.0 - v / total) / (total + 1.0) for v in concentration.values
    )


def beta_moments(shape1: float, shape2: float) -> tuple[float, float]:
    """Mean and variance of a Beta(shape1, shape2) distribution."""
    if shape1 <= 0 or shape2 <= 0:
        raise ValueError("beta shape parameters must be positive")
    total = shape1 + shape2
    mean = shape1 / total
    variance = shape1 * shape2 / (total * total * (total + 1.0))
    return mean, variance

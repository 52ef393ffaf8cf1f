"""Seeded Monte Carlo experiments over the allocation and negotiation model.

Four experiment families:

* ``alpha_effect``     — hold the mean allocation fixed while sweeping the
                         total concentration, recording how draw variance
                         shrinks as the total grows.
* ``scenario``         — replicate analyst/consumer pairs under a negotiation
                         strategy and record pre/post log-relative values,
                         adjustment distances, and the overall difference.
* ``propositions``     — the executable property suite: improvement window,
                         full-reversal optimality, field-matched mean, nonzero
                         baselines, and large-audience shrinkage.
* ``large_audience``   — error quantiles of the audience-average term across
                         audience sizes.

Replicate seeds are spawned from the root seed by index, so results are
identical however replicates are scheduled.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .metrics import (
    DEFAULT_EPSILON,
    DEFAULT_P,
    AlignmentKind,
    AlignmentVector,
    averaged_p_norm,
    sup_norm,
)
from .negotiation import (
    NegotiationStrategy,
    improvement_check,
    large_audience_baseline,
    negotiate,
    optimal_adjustment,
    sample_party,
)
from .principles import (
    ConcentrationVector,
    LogRelativeVector,
    PrincipleSet,
    Role,
    default_principles,
    dirichlet_variance,
    from_log_relative,
    mean_allocation,
    sample_allocation_matrix,
)

MAX_SEED = 2**64
FIELD_MATCHED_DRAWS = 10_000
NONZERO_BASELINE_DRAWS = 100_000
IMPROVEMENT_GRID_DRAWS = 100
FULL_REVERSAL_DRAWS = 1_000
IMPROVEMENT_ALPHAS = tuple(i * 0.25 for i in range(13))  # 0, 0.25, ..., 3
NORM_IDENTITY_RTOL = 1e-12

STATUS_PASS = "PASS"
STATUS_FAIL = "FAIL"
STATUS_NOT_APPLICABLE = "NOT_APPLICABLE"


class ExperimentKind(str, Enum):
    ALPHA_EFFECT = "alpha_effect"
    SCENARIO = "scenario"
    PROPOSITIONS = "propositions"
    LARGE_AUDIENCE = "large_audience"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment needs, including its reproducibility seed."""

    experiment: ExperimentKind
    principles: PrincipleSet = field(default_factory=default_principles)
    mean_log_relative: tuple[float, ...] | None = None
    analyst_field_mean: tuple[float, ...] | None = None
    consumer_field_mean: tuple[float, ...] | None = None
    deviation_sd: float = 0.2
    alpha_zero_values: tuple[float, ...] = (1.0, 100.0)
    sample_count: int = 100_000
    replicates: int = 1_000
    strategy: NegotiationStrategy | None = None
    audience_sizes: tuple[int, ...] = (1, 100, 10_000)
    audience_replicates: int = 100
    epsilon: float = DEFAULT_EPSILON
    p: float = DEFAULT_P
    seed: int = 0
    keep_raw: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "experiment", ExperimentKind(self.experiment))
        if self.mean_log_relative is not None:
            object.__setattr__(
                self, "mean_log_relative", tuple(float(v) for v in self.mean_log_relative)
            )
        if self.analyst_field_mean is not None:
            object.__setattr__(
                self, "analyst_field_mean", tuple(float(v) for v in self.analyst_field_mean)
            )
        if self.consumer_field_mean is not None:
            object.__setattr__(
                self,
                "consumer_field_mean",
                tuple(float(v) for v in self.consumer_field_mean),
            )
        object.__setattr__(
            self, "alpha_zero_values", tuple(float(v) for v in self.alpha_zero_values)
        )
        object.__setattr__(
            self, "audience_sizes", tuple(int(v) for v in self.audience_sizes)
        )
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.audience_replicates < 1:
            raise ValueError(
                f"audience_replicates must be >= 1, got {self.audience_replicates}"
            )
        if any(a <= 0 for a in self.alpha_zero_values):
            raise ValueError("all total-concentration values must be positive")
        if any(j < 1 for j in self.audience_sizes):
            raise ValueError("audience sizes must be >= 1")
        if self.deviation_sd < 0:
            raise ValueError(f"deviation_sd must be >= 0, got {self.deviation_sd}")
        if not 0 <= int(self.seed) < MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def _field_vector(self, values: tuple[float, ...] | None) -> LogRelativeVector:
        reference = self.principles.reference_index
        if values is None:
            return LogRelativeVector.zeros(self.principles.size, reference)
        return LogRelativeVector(values, reference)

    @property
    def analyst_mean_vector(self) -> LogRelativeVector:
        return self._field_vector(self.analyst_field_mean)

    @property
    def consumer_mean_vector(self) -> LogRelativeVector:
        return self._field_vector(self.consumer_field_mean)

    @property
    def shared_mean_vector(self) -> LogRelativeVector:
        return self._field_vector(self.mean_log_relative)


@dataclass(frozen=True)
class ExperimentResult:
    """Summary rows (and optionally raw rows) plus the seed that made them."""

    experiment: str
    seed: int
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    raw_columns: tuple[str, ...] = ()
    raw_rows: tuple[tuple, ...] = ()
    passed: bool | None = None

    def write_csv(self, target: str | Path | TextIO) -> None:
        _write_rows(target, self.columns, self.rows)

    def write_raw_csv(self, target: str | Path | TextIO) -> None:
        if not self.raw_columns:
            raise ValueError(f"experiment {self.experiment} produced no raw rows")
        _write_rows(target, self.raw_columns, self.raw_rows)


def _write_rows(
    target: str | Path | TextIO, columns: Sequence[str], rows: Iterable[tuple]
) -> None:
    handle, owned = (
        (target, False)
        if hasattr(target, "write")
        else (open(target, "w", encoding="utf-8", newline=""), True)
    )
    try:
        writer = csv.writer(handle)
        writer.writerow(columns)
        writer.writerows(rows)
    finally:
        if owned:
            handle.close()


def _spawn(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from parsed JSON, rejecting unknown keys."""
    data = dict(data)
    kwargs: dict = {}
    if "experiment" not in data:
        raise ValueError("config requires an 'experiment' key")
    kwargs["experiment"] = ExperimentKind(data.pop("experiment"))
    if "principles" in data:
        spec = data.pop("principles")
        if isinstance(spec, dict):
            kwargs["principles"] = PrincipleSet(
                tuple(spec["names"]), int(spec.get("reference_index", 0))
            )
        else:
            kwargs["principles"] = PrincipleSet(tuple(spec))
    if "strategy" in data:
        spec = data.pop("strategy")
        if spec is not None:
            kwargs["strategy"] = NegotiationStrategy(
                kind=spec["kind"],
                analyst_concession=spec.get("analyst_concession"),
                consumer_concession=spec.get("consumer_concession"),
                alpha=spec.get("alpha"),
            )
    passthrough = (
        "mean_log_relative",
        "analyst_field_mean",
        "consumer_field_mean",
        "deviation_sd",
        "alpha_zero_values",
        "sample_count",
        "replicates",
        "audience_sizes",
        "audience_replicates",
        "epsilon",
        "p",
        "seed",
        "keep_raw",
    )
    for key in passthrough:
        if key in data:
            kwargs[key] = data.pop(key)
    if data:
        raise ValueError(f"unknown config key(s): {', '.join(sorted(data))}")
    return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return config_from_dict(json.load(handle))


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    runner = {
        ExperimentKind.ALPHA_EFFECT: run_alpha_effect,
        ExperimentKind.SCENARIO: run_scenario,
        ExperimentKind.PROPOSITIONS: run_propositions,
        ExperimentKind.LARGE_AUDIENCE: run_large_audience,
    }[config.experiment]
    return runner(config)


def run_alpha_effect(config: ExperimentConfig) -> ExperimentResult:
    """Sweep total concentration at a fixed mean allocation.

    Every condition shares the same mean model; only the total differs, so
    empirical variances must fall as the total grows while empirical means
    stay put.
    """
    if len(config.alpha_zero_values) < 2:
        raise ValueError("alpha_effect needs at least two total-concentration values")
    names = config.principles.names
    mu = mean_allocation(from_log_relative(config.shared_mean_vector, 1.0)).weights
    totals = tuple(sorted(set(config.alpha_zero_values)))
    seeds = _spawn(config.seed, len(totals))
    rows: list[tuple] = []
    raw_rows: list[tuple] = []
    for total, child in zip(totals, seeds):
        concentration = ConcentrationVector.from_values(total * m for m in mu)
        matrix = sample_allocation_matrix(concentration, config.sample_count, child)
        empirical_mean = matrix.mean(axis=0)
        empirical_var = matrix.var(axis=0, ddof=1)
        theoretical_var = dirichlet_variance(concentration)
        for k, name in enumerate(names):
            rows.append(
                (
                    f"alpha0={total:g}",
                    name,
                    float(empirical_mean[k]),
                    float(empirical_var[k]),
                    mu[k],
                    theoretical_var[k],
                )
            )
        if config.keep_raw:
            for i in range(matrix.shape[0]):
                for k, name in enumerate(names):
                    raw_rows.append(
                        (f"alpha0={total:g}", i, name, float(matrix[i, k]))
                    )
    return ExperimentResult(
        experiment=ExperimentKind.ALPHA_EFFECT.value,
        seed=config.seed,
        columns=(
            "condition",
            "principle",
            "empirical_mean",
            "empirical_variance",
            "theoretical_mean",
            "theoretical_variance",
        ),
        rows=tuple(rows),
        raw_columns=("condition", "draw", "principle", "allocation"),
        raw_rows=tuple(raw_rows),
    )


def run_scenario(config: ExperimentConfig) -> ExperimentResult:
    """Replicate negotiations under one strategy.

    Summary rows aggregate per principle; raw rows carry one line per
    replicate with the baseline and overall norms, which is where exact
    per-replicate cancellation shows up.
    """
    if config.strategy is None:
        raise ValueError("scenario experiments require a strategy")
    names = config.principles.names
    size = config.principles.size
    analyst_mean = config.analyst_mean_vector
    consumer_mean = config.consumer_mean_vector
    seeds = _spawn(config.seed, 2 * config.replicates)

    analyst_base = np.empty((config.replicates, size))
    consumer_base = np.empty((config.replicates, size))
    analyst_move = np.empty((config.replicates, size))
    consumer_move = np.empty((config.replicates, size))
    overall = np.empty((config.replicates, size))
    raw_rows: list[tuple] = []
    for i in range(config.replicates):
        analyst = sample_party(
            analyst_mean, config.deviation_sd, seeds[2 * i], Role.ANALYST, field_id=1
        )
        consumer = sample_party(
            consumer_mean,
            config.deviation_sd,
            seeds[2 * i + 1],
            Role.CONSUMER,
            field_id=2,
        )
        outcome = negotiate(analyst, consumer, config.strategy, config.epsilon, config.p)
        analyst_base[i] = [
            m + d
            for m, d in zip(analyst_mean.values, analyst.individual_deviation.values)
        ]
        consumer_base[i] = [
            m + d
            for m, d in zip(consumer_mean.values, consumer.individual_deviation.values)
        ]
        analyst_move[i] = outcome.analyst_adjustment.values
        consumer_move[i] = outcome.consumer_adjustment.values
        overall[i] = outcome.overall.values
        raw_rows.append(
            (
                i,
                averaged_p_norm(outcome.baseline.values, 2.0),
                averaged_p_norm(outcome.overall.values, 2.0),
                sup_norm(outcome.overall.values),
                outcome.improved,
                outcome.verdict.strong,
                outcome.verdict.weak,
            )
        )

    rows = tuple(
        (
            names[k],
            float(analyst_base[:, k].mean()),
            float(consumer_base[:, k].mean()),
            float((analyst_base[:, k] + analyst_move[:, k]).mean()),
            float((consumer_base[:, k] + consumer_move[:, k]).mean()),
            float(analyst_move[:, k].mean()),
            float(consumer_move[:, k].mean()),
            float(np.abs(analyst_move[:, k]).mean()),
            float(np.abs(consumer_move[:, k]).mean()),
            float(overall[:, k].mean()),
            float(np.abs(overall[:, k]).max()),
        )
        for k in range(size)
    )
    return ExperimentResult(
        experiment=ExperimentKind.SCENARIO.value,
        seed=config.seed,
        columns=(
            "principle",
            "mean_analyst_baseline",
            "mean_consumer_baseline",
            "mean_analyst_resolution",
            "mean_consumer_resolution",
            "mean_analyst_adjustment",
            "mean_consumer_adjustment",
            "mean_abs_analyst_adjustment",
            "mean_abs_consumer_adjustment",
            "mean_overall",
            "max_abs_overall",
        ),
        rows=rows,
        raw_columns=(
            "replicate",
            "baseline_norm",
            "overall_norm",
            "overall_sup",
            "improved",
            "strong",
            "weak",
        ),
        raw_rows=tuple(raw_rows),
    )


def _random_alignment_vectors(
    rng: np.random.Generator, count: int, size: int, reference: int
) -> list[AlignmentVector]:
    draws = rng.normal(0.0, 1.0, size=(count, size))
    draws[:, reference] = 0.0
    return [
        AlignmentVector(AlignmentKind.BASELINE, tuple(row), reference) for row in draws
    ]


def _improvement_window_rows(
    config: ExperimentConfig, seed: np.random.SeedSequence
) -> tuple[list[tuple], bool]:
    rng = np.random.default_rng(seed)
    size = config.principles.size
    reference = config.principles.reference_index
    baselines = _random_alignment_vectors(rng, IMPROVEMENT_GRID_DRAWS, size, reference)
    rows: list[tuple] = []
    all_ok = True
    for alpha in IMPROVEMENT_ALPHAS:
        expected = alpha <= 2.0
        cell_ok = True
        for baseline in baselines:
            residual = baseline.scale(-alpha, AlignmentKind.RESIDUAL)
            if improvement_check(baseline, residual) != expected:
                cell_ok = False
                break
            base_norm = averaged_p_norm(baseline.values, 2.0)
            overall = tuple(b + r for b, r in zip(baseline.values, residual.values))
            identity_gap = abs(
                averaged_p_norm(overall, 2.0) - abs(1.0 - alpha) * base_norm
            )
            if identity_gap > NORM_IDENTITY_RTOL * base_norm:
                cell_ok = False
                break
        rows.append(
            (
                f"improvement-window[alpha={alpha:g}]",
                STATUS_PASS if cell_ok else STATUS_FAIL,
                f"expected_improved={expected}; negative_control={not expected}",
            )
        )
        all_ok = all_ok and cell_ok
    return rows, all_ok


def run_propositions(config: ExperimentConfig) -> ExperimentResult:
    """Executable property suite over the negotiation model.

    Checks, in order: the scaled-reversal improvement window (improved iff
    the scale lies in [0, 2]); full reversal zeroing the overall difference;
    field-matched pairs averaging to zero baseline; strictly positive
    baselines under continuous deviations; and audience-average error
    shrinking like the square root of the audience size.
    """
    seeds = _spawn(config.seed, 5)
    size = config.principles.size
    reference = config.principles.reference_index
    free = size - 1
    sd = config.deviation_sd
    rows: list[tuple] = []
    statuses: list[bool] = []

    grid_rows, grid_ok = _improvement_window_rows(config, seeds[0])
    rows.append(
        (
            "improvement-window",
            STATUS_PASS if grid_ok else STATUS_FAIL,
            f"{len(IMPROVEMENT_ALPHAS)} scales x {IMPROVEMENT_GRID_DRAWS} draws",
        )
    )
    rows.extend(grid_rows)
    statuses.append(grid_ok)

    rng = np.random.default_rng(seeds[1])
    reversal_ok = True
    for baseline in _random_alignment_vectors(rng, FULL_REVERSAL_DRAWS, size, reference):
        residual = optimal_adjustment(baseline)
        overall = tuple(b + r for b, r in zip(baseline.values, residual.values))
        if averaged_p_norm(overall, 2.0) != 0.0:
            reversal_ok = False
            break
    rows.append(
        (
            "full-reversal-optimal",
            STATUS_PASS if reversal_ok else STATUS_FAIL,
            f"{FULL_REVERSAL_DRAWS} draws, exact zero required",
        )
    )
    statuses.append(reversal_ok)

    rng = np.random.default_rng(seeds[2])
    deltas = rng.normal(0.0, sd, size=(FIELD_MATCHED_DRAWS, free))
    etas = rng.normal(0.0, sd, size=(FIELD_MATCHED_DRAWS, free))
    mean_abs = np.abs((deltas - etas).mean(axis=0))
    # standard error of a mean of N(0, 2 sd^2) draws
    bound = 3.0 * sd * math.sqrt(2.0 / FIELD_MATCHED_DRAWS)
    matched_ok = bool((mean_abs <= bound).all()) if sd > 0 else bool((mean_abs == 0).all())
    rows.append(
        (
            "field-matched-mean-zero",
            STATUS_PASS if matched_ok else STATUS_FAIL,
            f"max |mean| = {float(mean_abs.max()):.3e}, bound {bound:.3e}",
        )
    )
    statuses.append(matched_ok)

    if sd <= 0:
        rows.append(
            (
                "nonzero-baseline",
                STATUS_NOT_APPLICABLE,
                "continuity assumption violated: deviation_sd = 0",
            )
        )
    else:
        rng = np.random.default_rng(seeds[3])
        deltas = rng.normal(0.0, sd, size=(NONZERO_BASELINE_DRAWS, free))
        etas = rng.normal(0.0, sd, size=(NONZERO_BASELINE_DRAWS, free))
        norms = np.sqrt(((deltas - etas) ** 2).sum(axis=1) / size)
        nonzero_ok = bool((norms > 0.0).all())
        rows.append(
            (
                "nonzero-baseline",
                STATUS_PASS if nonzero_ok else STATUS_FAIL,
                f"min norm {float(norms.min()):.3e} over {NONZERO_BASELINE_DRAWS} draws",
            )
        )
        statuses.append(nonzero_ok)

    shrink_ok, detail = _audience_shrinkage(config, seeds[4])
    rows.append(
        ("large-audience-shrinkage", STATUS_PASS if shrink_ok else STATUS_FAIL, detail)
    )
    statuses.append(shrink_ok)

    return ExperimentResult(
        experiment=ExperimentKind.PROPOSITIONS.value,
        seed=config.seed,
        columns=("check", "status", "detail"),
        rows=tuple(rows),
        passed=all(statuses),
    )


def _audience_error_samples(
    config: ExperimentConfig, audience_size: int, seed: np.random.SeedSequence
) -> np.ndarray:
    """Sup-norm gap between the group baseline and the analyst deviation,
    one value per replicate."""
    field_mean = config.analyst_mean_vector
    errors = np.empty(config.audience_replicates)
    children = seed.spawn(config.audience_replicates)
    for i, child in enumerate(children):
        analyst_seed, audience_seed = child.spawn(2)
        analyst = sample_party(
            field_mean, config.deviation_sd, analyst_seed, Role.ANALYST
        )
        group_baseline = large_audience_baseline(
            analyst, field_mean, config.deviation_sd, audience_size, audience_seed
        )
        errors[i] = max(
            abs(b - d)
            for b, d in zip(
                group_baseline.values, analyst.individual_deviation.values
            )
        )
    return errors


def _audience_shrinkage(
    config: ExperimentConfig, seed: np.random.SeedSequence
) -> tuple[bool, str]:
    sizes = tuple(sorted(set(config.audience_sizes)))
    if len(sizes) < 2:
        return False, "need at least two audience sizes"
    if config.deviation_sd == 0:
        # degenerate audience: the error is exactly zero for every size
        children = seed.spawn(len(sizes))
        exact = all(
            float(_audience_error_samples(config, j, child).max()) == 0.0
            for j, child in zip(sizes, children)
        )
        return exact, "degenerate deviations: exact zero errors required"
    children = seed.spawn(len(sizes))
    medians = {
        j: float(np.median(_audience_error_samples(config, j, child)))
        for j, child in zip(sizes, children)
    }
    ok = True
    pieces = []
    for small, large in zip(sizes, sizes[1:]):
        observed = medians[small] / medians[large]
        expected = math.sqrt(large / small)
        pieces.append(
            f"J={small}->{large}: ratio {observed:.2f} vs sqrt {expected:.2f}"
        )
        if not expected / 1.5 <= observed <= expected * 1.5:
            ok = False
    return ok, "; ".join(pieces)


def run_large_audience(config: ExperimentConfig) -> ExperimentResult:
    """Error quantiles of the audience-average term across audience sizes."""
    sizes = tuple(sorted(set(config.audience_sizes)))
    if len(sizes) < 2:
        raise ValueError("large_audience needs at least two audience sizes")
    seeds = _spawn(config.seed, len(sizes))
    rows: list[tuple] = []
    raw_rows: list[tuple] = []
    for audience_size, child in zip(sizes, seeds):
        errors = _audience_error_samples(config, audience_size, child)
        q10, q50, q90 = np.quantile(errors, [0.1, 0.5, 0.9])
        rows.append((audience_size, float(q10), float(q50), float(q90)))
        if config.keep_raw:
            for i, err in enumerate(errors):
                raw_rows.append((audience_size, i, float(err)))
    return ExperimentResult(
        experiment=ExperimentKind.LARGE_AUDIENCE.value,
        seed=config.seed,
        columns=("audience_size", "q10_error", "median_error", "q90_error"),
        rows=tuple(rows),
        raw_columns=("audience_size", "replicate", "error"),
        raw_rows=tuple(raw_rows),
    )

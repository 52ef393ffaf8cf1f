"""Survey ingestion and estimation of field means, deviations, and adjustments.

The input is long-format CSV: one row per (subject, stage, principle) with
the columns subject_id, group_id, role, stage, principle, allocation. Each
subject-stage block must cover every declared principle and sum to 1 within
a small tolerance. Fitting treats each group as its members' field: the field
mean is the group average of baseline log-relative allocations, a subject's
deviation is its baseline residual from that mean, and its adjustment is the
resolution-minus-baseline movement.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

from .errors import (
    IncompleteSubjectError,
    SchemaError,
    SumViolationError,
    UnknownPrincipleError,
)
from .metrics import (
    DEFAULT_EPSILON,
    DEFAULT_P,
    AlignmentKind,
    AlignmentVector,
    AlignmentVerdict,
    evaluate_alignment,
)
from .principles import (
    AllocationVector,
    LogRelativeVector,
    PrincipleSet,
    Role,
    Stage,
    from_log_relative,
    log_relative,
    mean_allocation,
)

CSV_COLUMNS = ("subject_id", "group_id", "role", "stage", "principle", "allocation")
FIGURE_COLUMNS = CSV_COLUMNS + ("kind", "log_relative")
ROW_SUM_TOLERANCE = 1e-6

SUBJECT_KIND = "subject"
GROUP_MEAN_KIND = "group_mean"


@dataclass(frozen=True)
class AllocationRecord:
    """One subject's full allocation vector at one stage."""

    subject_id: str
    group_id: str
    role: Role
    stage: Stage
    allocations: AllocationVector

    def __post_init__(self) -> None:
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "stage", Stage(self.stage))
        if not self.subject_id:
            raise ValueError("subject_id must be non-empty")
        if not self.group_id:
            raise ValueError("group_id must be non-empty")


@dataclass(frozen=True)
class FitResult:
    """Estimated mean-model components for every group and subject.

    field_means maps group ids to the group-average baseline log-relative
    allocation; deviations and adjustments map subject ids to their baseline
    residual and resolution movement. Subjects without a resolution record
    appear in deviations but not adjustments.
    """

    field_means: dict[str, LogRelativeVector]
    deviations: dict[str, LogRelativeVector]
    adjustments: dict[str, LogRelativeVector]
    reference_index: int
    smoothing_constant: float
    subject_groups: dict[str, str] = field(default_factory=dict)
    subject_roles: dict[str, Role] = field(default_factory=dict)

    def baseline_log_relative(self, subject_id: str) -> LogRelativeVector:
        """The subject's fitted baseline: field mean plus deviation."""
        group = self.subject_groups[subject_id]
        return self.field_means[group].add(self.deviations[subject_id])


@dataclass(frozen=True)
class AlignmentReport:
    """Alignment metrics between one fitted analyst and fitted consumers."""

    analyst_id: str
    consumer_ids: tuple[str, ...]
    baseline: AlignmentVector
    overall: AlignmentVector
    residual: AlignmentVector
    baseline_verdict: AlignmentVerdict
    verdict: AlignmentVerdict


def _open_source(source: str | Path | TextIO) -> tuple[TextIO, bool]:
    if hasattr(source, "read"):
        return source, False  # caller-owned handle
    return open(source, "r", encoding="utf-8", newline=""), True


def ingest(
    source: str | Path | TextIO, principles: PrincipleSet
) -> list[AllocationRecord]:
    """Read and validate long-format allocation rows into records.

    Row sums within ROW_SUM_TOLERANCE of 1 are renormalized; anything farther
    off is rejected. Rows carrying a `kind` column other than "subject" (as
    emitted for figure data) are skipped. A subject may omit a whole stage,
    but a present stage must cover every principle exactly once.
    """
    handle, owned = _open_source(source)
    try:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise SchemaError("input is empty; expected a CSV header")
        missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"missing column(s): {', '.join(missing)}")
        has_kind = "kind" in reader.fieldnames

        cells: dict[tuple[str, Stage], dict[str, float]] = {}
        identity: dict[str, tuple[str, Role]] = {}
        order: list[tuple[str, Stage]] = []
        for line, row in enumerate(reader, start=2):
            if has_kind and row.get("kind") not in (None, "", SUBJECT_KIND):
                continue
            subject = (row["subject_id"] or "").strip()
            group = (row["group_id"] or "").strip()
            if not subject or not group:
                raise SchemaError(f"line {line}: subject_id and group_id are required")
            try:
                role = Role(row["role"])
            except ValueError:
                raise SchemaError(
                    f"line {line}: role must be analyst or consumer, got "
                    f"{row['role']!r}"
                ) from None
            try:
                stage = Stage(row["stage"])
            except ValueError:
                raise SchemaError(
                    f"line {line}: stage must be baseline or resolution, got "
                    f"{row['stage']!r}"
                ) from None
            principle = row["principle"]
            if principle not in principles.names:
                raise UnknownPrincipleError(
                    f"line {line}: unknown principle {principle!r}"
                )
            try:
                allocation = float(row["allocation"])
            except (TypeError, ValueError):
                raise SchemaError(
                    f"line {line}: allocation must be a number, got "
                    f"{row['allocation']!r}"
                ) from None
            if not 0.0 <= allocation <= 1.0:
                raise SchemaError(
                    f"line {line}: allocation must lie in [0, 1], got {allocation}"
                )
            known = identity.setdefault(subject, (group, role))
            if known != (group, role):
                raise SchemaError(
                    f"line {line}: subject {subject!r} previously seen with "
                    f"group/role {known}, now ({group!r}, {role.value!r})"
                )
            key = (subject, stage)
            block = cells.setdefault(key, {})
            if key not in order:
                order.append(key)
            if principle in block:
                raise SchemaError(
                    f"line {line}: duplicate principle {principle!r} for subject "
                    f"{subject!r} at stage {stage.value}"
                )
            block[principle] = allocation
    finally:
        if owned:
            handle.close()

    records: list[AllocationRecord] = []
    for subject, stage in order:
        block = cells[(subject, stage)]
        missing_principles = [n for n in principles.names if n not in block]
        if missing_principles:
            raise IncompleteSubjectError(
                f"subject {subject!r} stage {stage.value} is missing "
                f"{', '.join(missing_principles)}"
            )
        weights = [block[name] for name in principles.names]
        total = math.fsum(weights)
        if abs(total - 1.0) > ROW_SUM_TOLERANCE:
            raise SumViolationError(
                f"subject {subject!r} stage {stage.value} allocations sum to "
                f"{total!r}, outside 1 +/- {ROW_SUM_TOLERANCE:g}"
            )
        normalized = tuple(w / total for w in weights)
        group, role = identity[subject]
        records.append(
            AllocationRecord(
                subject_id=subject,
                group_id=group,
                role=role,
                stage=stage,
                allocations=AllocationVector(normalized, stage),
            )
        )
    records.sort(key=lambda r: (r.subject_id, r.stage.value))
    return records


def fit(
    records: Sequence[AllocationRecord],
    reference_index: int = 0,
    smoothing_constant: float = 0.0,
) -> FitResult:
    """Estimate field means, per-subject deviations, and adjustments.

    The field mean is the unweighted group average of baseline log-relative
    allocations, so within-group baseline deviations average to zero by
    construction. Adjustments are only defined for subjects observed at both
    stages.
    """
    if smoothing_constant < 0:
        raise ValueError(
            f"smoothing_constant must be >= 0, got {smoothing_constant}"
        )
    by_subject: dict[str, dict[Stage, AllocationRecord]] = {}
    for record in records:
        stages = by_subject.setdefault(record.subject_id, {})
        if record.stage in stages:
            raise ValueError(
                f"subject {record.subject_id!r} has duplicate stage "
                f"{record.stage.value}"
            )
        stages[record.stage] = record

    baselines: dict[str, LogRelativeVector] = {}
    adjustments: dict[str, LogRelativeVector] = {}
    subject_groups: dict[str, str] = {}
    subject_roles: dict[str, Role] = {}
    group_members: dict[str, list[str]] = {}
    for subject, stages in by_subject.items():
        if Stage.BASELINE not in stages:
            raise ValueError(
                f"subject {subject!r} has a resolution record but no baseline"
            )
        base_record = stages[Stage.BASELINE]
        base = log_relative(
            base_record.allocations, reference_index, smoothing=smoothing_constant
        )
        baselines[subject] = base
        subject_groups[subject] = base_record.group_id
        subject_roles[subject] = base_record.role
        group_members.setdefault(base_record.group_id, []).append(subject)
        if Stage.RESOLUTION in stages:
            resolution = log_relative(
                stages[Stage.RESOLUTION].allocations,
                reference_index,
                smoothing=smoothing_constant,
            )
            adjustments[subject] = resolution.subtract(base)

    if not baselines:
        raise ValueError("no baseline records to fit")

    field_means: dict[str, LogRelativeVector] = {}
    for group, members in group_members.items():
        count = len(members)
        mean_values = tuple(
            math.fsum(baselines[s].values[k] for s in members) / count
            for k in range(len(baselines[members[0]].values))
        )
        field_means[group] = LogRelativeVector(mean_values, reference_index)

    deviations = {
        subject: baselines[subject].subtract(field_means[subject_groups[subject]])
        for subject in baselines
    }
    return FitResult(
        field_means=field_means,
        deviations=deviations,
        adjustments=adjustments,
        reference_index=reference_index,
        smoothing_constant=smoothing_constant,
        subject_groups=subject_groups,
        subject_roles=subject_roles,
    )


def alignment_report(
    fit_result: FitResult,
    analyst_id: str,
    consumer_ids: Sequence[str],
    epsilon: float = DEFAULT_EPSILON,
    p: float = DEFAULT_P,
) -> AlignmentReport:
    """Alignment between one fitted subject (as analyst) and others (as
    consumers), averaging over the consumer group when there are several.

    Subjects without a fitted adjustment contribute zero adjustment.
    """
    if not consumer_ids:
        raise ValueError("at least one consumer id is required")
    for subject in (analyst_id, *consumer_ids):
        if subject not in fit_result.deviations:
            raise KeyError(f"unknown subject id {subject!r}")

    reference = fit_result.reference_index
    size = fit_result.deviations[analyst_id].size
    zero = LogRelativeVector.zeros(size, reference)

    analyst_base = fit_result.baseline_log_relative(analyst_id)
    consumer_bases = [fit_result.baseline_log_relative(c) for c in consumer_ids]
    count = len(consumer_bases)
    baseline_values = tuple(
        math.fsum(analyst_base.values[k] - base.values[k] for base in consumer_bases)
        / count
        for k in range(size)
    )
    baseline = AlignmentVector(AlignmentKind.BASELINE, baseline_values, reference)

    analyst_adjustment = fit_result.adjustments.get(analyst_id, zero)
    consumer_adjustments = [fit_result.adjustments.get(c, zero) for c in consumer_ids]
    residual_values = tuple(
        analyst_adjustment.values[k]
        - math.fsum(adj.values[k] for adj in consumer_adjustments) / count
        for k in range(size)
    )
    residual = AlignmentVector(AlignmentKind.RESIDUAL, residual_values, reference)
    overall = AlignmentVector(
        AlignmentKind.OVERALL,
        tuple(b + r for b, r in zip(baseline.values, residual.values)),
        reference,
    )
    return AlignmentReport(
        analyst_id=analyst_id,
        consumer_ids=tuple(consumer_ids),
        baseline=baseline,
        overall=overall,
        residual=residual,
        baseline_verdict=evaluate_alignment(baseline_as_overall(baseline), epsilon, p),
        verdict=evaluate_alignment(overall, epsilon, p),
    )


def baseline_as_overall(baseline: AlignmentVector) -> AlignmentVector:
    """View a baseline difference as an overall difference (zero adjustments)."""
    return AlignmentVector(
        AlignmentKind.OVERALL, baseline.values, baseline.reference_index
    )


def emit_figure_data(
    records: Sequence[AllocationRecord],
    fit_result: FitResult,
    principles: PrincipleSet,
) -> list[dict[str, object]]:
    """Long-format plot rows: every subject allocation plus group-mean rows.

    Subject rows carry the observed allocation and its fitted log-relative
    value; group-mean rows carry the field mean on both scales (allocation =
    the simplex point the field mean implies). Ordering is deterministic:
    subjects by (id, stage, principle), then groups by (id, principle).
    """
    names = principles.names
    rows: list[dict[str, object]] = []
    ordered = sorted(records, key=lambda r: (r.subject_id, r.stage.value))
    for record in ordered:
        log_rel = log_relative(
            record.allocations,
            fit_result.reference_index,
            smoothing=fit_result.smoothing_constant,
        )
        for k, name in enumerate(names):
            rows.append(
                {
                    "subject_id": record.subject_id,
                    "group_id": record.group_id,
                    "role": record.role.value,
                    "stage": record.stage.value,
                    "principle": name,
                    "allocation": record.allocations.weights[k],
                    "kind": SUBJECT_KIND,
                    "log_relative": log_rel.values[k],
                }
            )
    for group in sorted(fit_result.field_means):
        mean_vector = fit_result.field_means[group]
        implied = mean_allocation(from_log_relative(mean_vector, 1.0))
        for k, name in enumerate(names):
            rows.append(
                {
                    "subject_id": "",
                    "group_id": group,
                    "role": "",
                    "stage": Stage.BASELINE.value,
                    "principle": name,
                    "allocation": implied.weights[k],
                    "kind": GROUP_MEAN_KIND,
                    "log_relative": mean_vector.values[k],
                }
            )
    return rows


def write_figure_csv(
    rows: Iterable[Mapping[str, object]], target: str | Path | TextIO
) -> None:
    """Write figure rows with the documented column order."""
    handle, owned = (
        (target, False)
        if hasattr(target, "write")
        else (open(target, "w", encoding="utf-8", newline=""), True)
    )
    try:
        writer = csv.DictWriter(handle, fieldnames=FIGURE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in FIGURE_COLUMNS})
    finally:
        if owned:
            handle.close()

"""Negotiation sessions: the forward-only stage machine with live metrics.

A session walks baseline -> negotiation -> resolution -> closed. Baseline
submissions are only accepted at the baseline stage; once both parties have
submitted, the baseline difference and verdict are computed and the session
moves to negotiation on its own. Resolution submissions are accepted from the
negotiation stage onward, and once both are in, the overall difference, the
per-party adjustments, and the final verdict are computed. Advancing to
resolution with a party still pending treats that party's baseline as its
resolution (zero adjustment). Every mutation is persisted atomically before
it is returned.
"""

from __future__ import annotations

import csv
import io
import uuid
from collections import defaultdict
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from enum import Enum
from threading import Lock
from typing import Sequence

from .errors import StageOrderError
from .estimation import CSV_COLUMNS
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
    default_principles,
    from_log_relative,
    log_relative,
    mean_allocation,
)
from .store import SessionStore


class SessionStage(str, Enum):
    BASELINE = "baseline"
    NEGOTIATION = "negotiation"
    RESOLUTION = "resolution"
    CLOSED = "closed"


_STAGE_SEQUENCE = (
    SessionStage.BASELINE,
    SessionStage.NEGOTIATION,
    SessionStage.RESOLUTION,
    SessionStage.CLOSED,
)


def _successor(stage: SessionStage) -> SessionStage | None:
    index = _STAGE_SEQUENCE.index(stage)
    if index + 1 >= len(_STAGE_SEQUENCE):
        return None
    return _STAGE_SEQUENCE[index + 1]


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class BaselineMetrics:
    """Computed once both baseline submissions exist."""

    difference: AlignmentVector
    verdict: AlignmentVerdict


@dataclass(frozen=True)
class ResolutionMetrics:
    """Computed once both resolution allocations are known."""

    overall: AlignmentVector
    residual: AlignmentVector
    analyst_adjustment: LogRelativeVector
    consumer_adjustment: LogRelativeVector
    verdict: AlignmentVerdict


@dataclass
class SessionRecord:
    """One persisted negotiation session."""

    session_id: str
    principles: PrincipleSet
    epsilon: float
    p: float
    stage: SessionStage
    submissions: dict[tuple[Role, Stage], AllocationVector]
    baseline_metrics: BaselineMetrics | None
    resolution_metrics: ResolutionMetrics | None
    created_at: str
    updated_at: str

    def submission(self, role: Role, stage: Stage) -> AllocationVector | None:
        return self.submissions.get((role, stage))

    def to_dict(self) -> dict:
        payload: dict = {
            "session_id": self.session_id,
            "principles": {
                "names": list(self.principles.names),
                "reference_index": self.principles.reference_index,
            },
            "epsilon": self.epsilon,
            "p": self.p,
            "stage": self.stage.value,
            "submissions": {
                f"{role.value}:{stage.value}": list(allocation.weights)
                for (role, stage), allocation in sorted(
                    self.submissions.items(),
                    key=lambda item: (item[0][0].value, item[0][1].value),
                )
            },
            "baseline": None,
            "resolution": None,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }
        if self.baseline_metrics is not None:
            payload["baseline"] = {
                "difference": list(self.baseline_metrics.difference.values),
                "verdict": asdict(self.baseline_metrics.verdict),
            }
        if self.resolution_metrics is not None:
            metrics = self.resolution_metrics
            payload["resolution"] = {
                "overall": list(metrics.overall.values),
                "residual": list(metrics.residual.values),
                "analyst_adjustment": list(metrics.analyst_adjustment.values),
                "consumer_adjustment": list(metrics.consumer_adjustment.values),
                "verdict": asdict(metrics.verdict),
            }
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "SessionRecord":
        principles = PrincipleSet(
            tuple(payload["principles"]["names"]),
            int(payload["principles"]["reference_index"]),
        )
        reference = principles.reference_index
        submissions: dict[tuple[Role, Stage], AllocationVector] = {}
        for key, weights in payload["submissions"].items():
            role_name, stage_name = key.split(":", 1)
            stage = Stage(stage_name)
            submissions[(Role(role_name), stage)] = AllocationVector(
                tuple(weights), stage
            )
        baseline = None
        if payload.get("baseline") is not None:
            baseline = BaselineMetrics(
                difference=AlignmentVector(
                    AlignmentKind.BASELINE,
                    tuple(payload["baseline"]["difference"]),
                    reference,
                ),
                verdict=AlignmentVerdict(**payload["baseline"]["verdict"]),
            )
        resolution = None
        if payload.get("resolution") is not None:
            block = payload["resolution"]
            resolution = ResolutionMetrics(
                overall=AlignmentVector(
                    AlignmentKind.OVERALL, tuple(block["overall"]), reference
                ),
                residual=AlignmentVector(
                    AlignmentKind.RESIDUAL, tuple(block["residual"]), reference
                ),
                analyst_adjustment=LogRelativeVector(
                    tuple(block["analyst_adjustment"]), reference
                ),
                consumer_adjustment=LogRelativeVector(
                    tuple(block["consumer_adjustment"]), reference
                ),
                verdict=AlignmentVerdict(**block["verdict"]),
            )
        return cls(
            session_id=payload["session_id"],
            principles=principles,
            epsilon=float(payload["epsilon"]),
            p=float(payload["p"]),
            stage=SessionStage(payload["stage"]),
            submissions=submissions,
            baseline_metrics=baseline,
            resolution_metrics=resolution,
            created_at=payload["created_at"],
            updated_at=payload["updated_at"],
        )


class SessionService:
    """The only mutation path for sessions; serializes writers per session."""

    def __init__(self, store: SessionStore) -> None:
        self._store = store
        self._locks: defaultdict[str, Lock] = defaultdict(Lock)
        self._registry_lock = Lock()

    def _lock_for(self, session_id: str) -> Lock:
        with self._registry_lock:
            return self._locks[session_id]

    def create(
        self,
        principle_names: Sequence[str] | None = None,
        epsilon: float = DEFAULT_EPSILON,
        p: float = DEFAULT_P,
        reference_index: int = 0,
    ) -> SessionRecord:
        if epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {epsilon}")
        if p < 1:
            raise ValueError(f"p must be >= 1, got {p}")
        principles = (
            PrincipleSet(tuple(principle_names), reference_index)
            if principle_names is not None
            else default_principles(reference_index)
        )
        now = _utc_now()
        record = SessionRecord(
            session_id=uuid.uuid4().hex,
            principles=principles,
            epsilon=float(epsilon),
            p=float(p),
            stage=SessionStage.BASELINE,
            submissions={},
            baseline_metrics=None,
            resolution_metrics=None,
            created_at=now,
            updated_at=now,
        )
        self._store.save(record.session_id, record.to_dict())
        return record

    def get(self, session_id: str) -> SessionRecord:
        return SessionRecord.from_dict(self._store.load(session_id))

    def submit(
        self, session_id: str, role: Role | str, stage: Stage | str, weights
    ) -> SessionRecord:
        role = Role(role)
        stage = Stage(stage)
        with self._lock_for(session_id):
            record = self.get(session_id)
            _check_submission_stage(record.stage, stage)
            record.submissions[(role, stage)] = AllocationVector(
                tuple(weights), stage
            )
            self._recompute(record)
            record.updated_at = _utc_now()
            self._store.save(record.session_id, record.to_dict())
        return record

    def suggest(self, session_id: str, gamma_a: float, gamma_c: float) -> dict:
        """Concession-scaled suggestions, returned for humans to adopt or not."""
        for name, value in (("gamma_a", gamma_a), ("gamma_c", gamma_c)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        record = self.get(session_id)
        if record.baseline_metrics is None:
            raise StageOrderError(
                "cannot suggest a resolution before both baseline submissions"
            )
        reference = record.principles.reference_index
        baseline = record.baseline_metrics.difference
        analyst_adjustment = baseline.scale(-float(gamma_a)).as_log_relative()
        consumer_adjustment = baseline.scale(float(gamma_c)).as_log_relative()
        predicted_values = tuple(
            b + (a - c)
            for b, a, c in zip(
                baseline.values,
                analyst_adjustment.values,
                consumer_adjustment.values,
            )
        )
        predicted = AlignmentVector(AlignmentKind.OVERALL, predicted_values, reference)
        analyst_weights = _apply_adjustment(
            record.submissions[(Role.ANALYST, Stage.BASELINE)],
            analyst_adjustment,
            reference,
        )
        consumer_weights = _apply_adjustment(
            record.submissions[(Role.CONSUMER, Stage.BASELINE)],
            consumer_adjustment,
            reference,
        )
        return {
            "analyst_weights": list(analyst_weights),
            "consumer_weights": list(consumer_weights),
            "predicted_D": list(predicted.values),
            "predicted_verdict": asdict(
                evaluate_alignment(predicted, record.epsilon, record.p)
            ),
        }

    def advance(self, session_id: str, to_stage: SessionStage | str) -> SessionRecord:
        target = SessionStage(to_stage)
        with self._lock_for(session_id):
            record = self.get(session_id)
            expected = _successor(record.stage)
            if expected is None or target is not expected:
                raise StageOrderError(
                    f"cannot advance from {record.stage.value} to {target.value}; "
                    "stages move forward one step at a time"
                )
            if target is SessionStage.NEGOTIATION and record.baseline_metrics is None:
                raise StageOrderError(
                    "cannot enter negotiation before both baseline submissions"
                )
            if target is SessionStage.RESOLUTION:
                if record.baseline_metrics is None:
                    raise StageOrderError(
                        "cannot enter resolution before both baseline submissions"
                    )
                self._compute_resolution(record, fill_missing=True)
            record.stage = target
            record.updated_at = _utc_now()
            self._store.save(record.session_id, record.to_dict())
        return record

    def export_csv(self, session_id: str) -> str:
        """Session submissions in the survey schema, ready for estimation."""
        record = self.get(session_id)
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(CSV_COLUMNS)
        for (role, stage), allocation in sorted(
            record.submissions.items(),
            key=lambda item: (item[0][0].value, item[0][1].value),
        ):
            for name, weight in zip(record.principles.names, allocation.weights):
                writer.writerow(
                    [
                        role.value,
                        record.session_id,
                        role.value,
                        stage.value,
                        name,
                        repr(weight),
                    ]
                )
        return buffer.getvalue()

    def _recompute(self, record: SessionRecord) -> None:
        analyst_base = record.submission(Role.ANALYST, Stage.BASELINE)
        consumer_base = record.submission(Role.CONSUMER, Stage.BASELINE)
        if analyst_base is None or consumer_base is None:
            return
        reference = record.principles.reference_index
        analyst_log = log_relative(analyst_base, reference)
        consumer_log = log_relative(consumer_base, reference)
        difference = AlignmentVector(
            AlignmentKind.BASELINE,
            analyst_log.subtract(consumer_log).values,
            reference,
        )
        record.baseline_metrics = BaselineMetrics(
            difference=difference,
            verdict=evaluate_alignment(
                AlignmentVector(AlignmentKind.OVERALL, difference.values, reference),
                record.epsilon,
                record.p,
            ),
        )
        if record.stage is SessionStage.BASELINE:
            record.stage = SessionStage.NEGOTIATION
        self._compute_resolution(record, fill_missing=False)
        if (
            record.resolution_metrics is not None
            and record.stage is SessionStage.NEGOTIATION
        ):
            record.stage = SessionStage.RESOLUTION

    def _compute_resolution(self, record: SessionRecord, fill_missing: bool) -> None:
        if record.baseline_metrics is None:
            return
        analyst_resolution = record.submission(Role.ANALYST, Stage.RESOLUTION)
        consumer_resolution = record.submission(Role.CONSUMER, Stage.RESOLUTION)
        if not fill_missing and (
            analyst_resolution is None or consumer_resolution is None
        ):
            return
        analyst_base = record.submission(Role.ANALYST, Stage.BASELINE)
        consumer_base = record.submission(Role.CONSUMER, Stage.BASELINE)
        reference = record.principles.reference_index
        analyst_log = log_relative(analyst_base, reference)
        consumer_log = log_relative(consumer_base, reference)
        # a party with no resolution submission keeps its baseline: zero adjustment
        analyst_adjustment = (
            LogRelativeVector.zeros(record.principles.size, reference)
            if analyst_resolution is None
            else log_relative(analyst_resolution, reference).subtract(analyst_log)
        )
        consumer_adjustment = (
            LogRelativeVector.zeros(record.principles.size, reference)
            if consumer_resolution is None
            else log_relative(consumer_resolution, reference).subtract(consumer_log)
        )
        baseline = record.baseline_metrics.difference
        residual_values = tuple(
            a - c
            for a, c in zip(analyst_adjustment.values, consumer_adjustment.values)
        )
        overall_values = tuple(
            b + r for b, r in zip(baseline.values, residual_values)
        )
        overall = AlignmentVector(AlignmentKind.OVERALL, overall_values, reference)
        record.resolution_metrics = ResolutionMetrics(
            overall=overall,
            residual=AlignmentVector(
                AlignmentKind.RESIDUAL, residual_values, reference
            ),
            analyst_adjustment=analyst_adjustment,
            consumer_adjustment=consumer_adjustment,
            verdict=evaluate_alignment(overall, record.epsilon, record.p),
        )


def _check_submission_stage(current: SessionStage, submitted: Stage) -> None:
    if current is SessionStage.CLOSED:
        raise StageOrderError("session is closed")
    if submitted is Stage.BASELINE and current is not SessionStage.BASELINE:
        raise StageOrderError(
            f"baseline submissions are only accepted at the baseline stage, "
            f"session is at {current.value}"
        )
    if submitted is Stage.RESOLUTION and current is SessionStage.BASELINE:
        raise StageOrderError(
            "resolution submissions are only accepted once negotiation has begun"
        )


def _apply_adjustment(
    allocation: AllocationVector, adjustment: LogRelativeVector, reference: int
) -> tuple[float, ...]:
    adjusted = log_relative(allocation, reference).add(adjustment)
    return mean_allocation(from_log_relative(adjusted, 1.0)).weights

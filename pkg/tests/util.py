"""Shared builders for synthetic survey data."""

import io

import numpy as np

from alignkit.principles import (
    LogRelativeVector,
    PrincipleSet,
    from_log_relative,
    mean_allocation,
)

CSV_HEADER = "subject_id,group_id,role,stage,principle,allocation"


def weights_from_log_relative(values, reference=0):
    """Simplex point implied by a log-relative vector."""
    vector = LogRelativeVector(tuple(values), reference)
    return mean_allocation(from_log_relative(vector, 1.0)).weights


def survey_csv(rows):
    """Build CSV text from (subject, group, role, stage, weights) tuples,
    expanding each weights vector against the given principle names."""
    lines = [CSV_HEADER]
    for subject, group, role, stage, names, weights in rows:
        for name, weight in zip(names, weights):
            lines.append(f"{subject},{group},{role},{stage},{name},{weight!r}")
    return "\n".join(lines) + "\n"


def simulate_survey(
    principles: PrincipleSet,
    group_count: int,
    members_per_group: int,
    deviation_sd: float,
    seed: int,
    adjustment_scale: float = 0.3,
):
    """Synthetic two-stage survey from known field means and adjustments.

    Returns (csv_text, truth) where truth maps group ids to field-mean
    log-relative vectors and subject ids to their true adjustment vectors.
    """
    rng = np.random.default_rng(seed)
    size = principles.size
    reference = principles.reference_index
    rows = []
    field_means = {}
    adjustments = {}
    deviations = {}
    for g in range(group_count):
        group = f"g{g + 1}"
        mean_values = rng.normal(0.0, 0.5, size)
        mean_values[reference] = 0.0
        field_means[group] = tuple(mean_values)
        for m in range(members_per_group):
            subject = f"{group}s{m + 1}"
            delta = rng.normal(0.0, deviation_sd, size)
            delta[reference] = 0.0
            deviations[subject] = tuple(delta)
            phi = rng.normal(0.0, adjustment_scale, size)
            phi[reference] = 0.0
            adjustments[subject] = tuple(phi)
            base_log = mean_values + delta
            resolution_log = base_log + phi
            rows.append(
                (
                    subject,
                    group,
                    "analyst",
                    "baseline",
                    principles.names,
                    weights_from_log_relative(base_log, reference),
                )
            )
            rows.append(
                (
                    subject,
                    group,
                    "analyst",
                    "resolution",
                    principles.names,
                    weights_from_log_relative(resolution_log, reference),
                )
            )
    return survey_csv(rows), {
        "field_means": field_means,
        "deviations": deviations,
        "adjustments": adjustments,
    }


def as_stream(text: str) -> io.StringIO:
    return io.StringIO(text)

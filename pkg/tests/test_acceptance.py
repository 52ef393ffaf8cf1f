"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS/FAIL lines. Every tolerance is fixed here, at documented seeds.
"""

import io
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from fastapi.testclient import TestClient

import alignkit.store
from alignkit.estimation import emit_figure_data, fit, ingest, write_figure_csv
from alignkit.metrics import (
    AlignmentKind,
    AlignmentVector,
    averaged_p_norm,
    overall_alignment,
)
from alignkit.negotiation import NegotiationStrategy, optimal_adjustment
from alignkit.principles import (
    ConcentrationVector,
    LogRelativeVector,
    PrincipleSet,
    default_principles,
    re_reference,
    sample_allocation_matrix,
)
from alignkit.service import create_app
from alignkit.simulation import (
    STATUS_PASS,
    ExperimentConfig,
    ExperimentKind,
    run_alpha_effect,
    run_propositions,
    run_scenario,
)
from alignkit.store import SessionStore
from util import simulate_survey, survey_csv, weights_from_log_relative


@contextmanager
def criterion(number: int, label: str):
    try:
        yield
    except Exception:
        print(f"[criterion {number}] FAIL  {label}")
        raise
    print(f"[criterion {number}] PASS  {label}")


def random_alignment(rng, size=4, reference=0):
    values = rng.normal(0.0, 1.0, size)
    values[reference] = 0.0
    return AlignmentVector(AlignmentKind.BASELINE, tuple(values), reference)


def test_criterion_1_dirichlet_moments():
    with criterion(1, "dirichlet moment match over a 6-condition grid"):
        conditions = [
            ((1 / 3, 1 / 3, 1 / 3), 1.0),
            ((1 / 3, 1 / 3, 1 / 3), 100.0),
            ((0.2, 0.3, 0.5), 10.0),
            ((0.2, 0.3, 0.5), 100.0),
            ((0.1, 0.2, 0.3, 0.4), 5.0),
            ((1 / 6,) * 6, 50.0),
        ]
        count = 100_000
        started = time.perf_counter()
        for index, (mean, total) in enumerate(conditions):
            concentration = ConcentrationVector.from_values(
                total * m for m in mean
            )
            matrix = sample_allocation_matrix(concentration, count, seed=5200 + index)
            for k, mu in enumerate(mean):
                theoretical_var = mu * (1.0 - mu) / (total + 1.0)
                se_mean = math.sqrt(theoretical_var / count)
                assert abs(matrix[:, k].mean() - mu) <= 3 * se_mean
                empirical_var = matrix[:, k].var(ddof=1)
                assert abs(empirical_var - theoretical_var) <= 0.10 * theoretical_var
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"moment grid took {elapsed:.1f}s"


def test_criterion_2_variance_ratio_across_totals():
    with criterion(2, "total concentration 1 vs 100 yields ~50.5x variance ratio"):
        config = ExperimentConfig(
            experiment=ExperimentKind.ALPHA_EFFECT,
            principles=PrincipleSet(("a", "b", "c")),
            alpha_zero_values=(1.0, 100.0),
            sample_count=100_000,
            seed=8,
        )
        result = run_alpha_effect(config)
        variances = {
            (row[0], row[1]): row[3] for row in result.rows
        }
        means = {(row[0], row[1]): row[2] for row in result.rows}
        for principle in config.principles.names:
            ratio = (
                variances[("alpha0=1", principle)]
                / variances[("alpha0=100", principle)]
            )
            assert abs(ratio - 50.5) <= 0.20 * 50.5
            assert abs(
                means[("alpha0=1", principle)] - means[("alpha0=100", principle)]
            ) < 0.01


def test_criterion_3_improvement_grid():
    with criterion(3, "scaled reversal improves iff the scale is within [0, 2]"):
        rng = np.random.default_rng(303)
        improving = [i * 0.25 for i in range(9)]  # 0 .. 2
        worsening = [2.25, 2.5, 3.0]
        for _ in range(100):
            baseline = random_alignment(rng)
            base_norm = averaged_p_norm(baseline.values, 2.0)
            assert base_norm > 0.0
            for alpha in improving + worsening:
                residual = baseline.scale(-alpha, AlignmentKind.RESIDUAL)
                overall, _ = overall_alignment(
                    baseline,
                    residual.as_log_relative(),
                    LogRelativeVector.zeros(baseline.size, baseline.reference_index),
                )
                overall_norm = averaged_p_norm(overall.values, 2.0)
                expected = abs(1.0 - alpha) * base_norm
                assert abs(overall_norm - expected) <= 1e-12 * max(base_norm, expected)
                if alpha in worsening:
                    assert overall_norm > base_norm
                else:
                    assert overall_norm <= base_norm * (1.0 + 1e-12)


def test_criterion_4_full_reversal_is_exact():
    with criterion(4, "full reversal zeroes the overall difference exactly"):
        rng = np.random.default_rng(404)
        for _ in range(1000):
            baseline = random_alignment(rng, size=5)
            residual = optimal_adjustment(baseline)
            overall, _ = overall_alignment(
                baseline,
                residual.as_log_relative(),
                LogRelativeVector.zeros(baseline.size, baseline.reference_index),
            )
            assert averaged_p_norm(overall.values, 2.0) == 0.0


def test_criterion_5_population_properties():
    with criterion(
        5, "field-matched mean-zero, nonzero baselines, audience shrinkage"
    ):
        config = ExperimentConfig(
            experiment=ExperimentKind.PROPOSITIONS, seed=42, deviation_sd=0.2
        )
        result = run_propositions(config)
        statuses = {row[0]: row[1] for row in result.rows if "[" not in row[0]}
        assert statuses["field-matched-mean-zero"] == STATUS_PASS
        assert statuses["nonzero-baseline"] == STATUS_PASS
        assert statuses["large-audience-shrinkage"] == STATUS_PASS
        assert result.passed is True


def test_criterion_6_scenario_exactness():
    with criterion(6, "named profiles cancel exactly; concessions scale the norm"):
        base = dict(
            experiment=ExperimentKind.SCENARIO,
            principles=PrincipleSet(("a", "b", "c")),
            analyst_field_mean=(0.0, 0.5, -0.2),
            consumer_field_mean=(0.0, 0.1, 0.3),
            deviation_sd=0.2,
            replicates=1_000,
            seed=606,
        )
        for strategy in (
            NegotiationStrategy.accommodating_analyst(),
            NegotiationStrategy.intransigent_analyst(),
            NegotiationStrategy.design_focused(),  # 0.5 + 0.5 concessions
        ):
            result = run_scenario(ExperimentConfig(strategy=strategy, **base))
            sups = [row[3] for row in result.raw_rows]
            assert len(sups) == 1_000
            assert max(sups) <= 1e-12
        gamma_a, gamma_c = 0.3, 0.4
        result = run_scenario(
            ExperimentConfig(
                strategy=NegotiationStrategy.design_focused(gamma_a, gamma_c), **base
            )
        )
        shrink = abs(1.0 - (gamma_a + gamma_c))
        for _, baseline_norm, overall_norm, _, _, _, _ in result.raw_rows:
            assert abs(overall_norm - shrink * baseline_norm) <= 1e-12 * baseline_norm


def test_criterion_7_estimation_round_trip():
    with criterion(7, "estimation recovers known parameters; reference-free"):
        principles = PrincipleSet(("a", "b", "c"))
        sd = 0.1
        for members in (4, 16, 64):
            text, truth = simulate_survey(
                principles,
                group_count=7,
                members_per_group=members,
                deviation_sd=sd,
                seed=700 + members,
            )
            records = ingest(io.StringIO(text), principles)
            result = fit(records)
            bound = 3 * sd / math.sqrt(members)
            for group, true_mean in truth["field_means"].items():
                gap = np.abs(
                    np.asarray(result.field_means[group].values)
                    - np.asarray(true_mean)
                )
                assert gap.max() <= bound
            for subject, true_phi in truth["adjustments"].items():
                gap = np.abs(
                    np.asarray(result.adjustments[subject].values)
                    - np.asarray(true_phi)
                )
                assert gap.max() <= 1e-9
            per_group: dict[str, list] = {}
            for subject, deviation in result.deviations.items():
                per_group.setdefault(result.subject_groups[subject], []).append(
                    deviation.values
                )
            for values in per_group.values():
                assert np.abs(np.asarray(values).mean(axis=0)).max() <= 1e-9

        # reference choice must not change the baseline-difference content
        text, _ = simulate_survey(
            principles, group_count=3, members_per_group=4, deviation_sd=sd, seed=777
        )
        records = ingest(io.StringIO(text), principles)
        fit_zero = fit(records, reference_index=0)
        fit_two = fit(records, reference_index=2)
        subjects = sorted(fit_zero.deviations)
        analyst, consumer = subjects[0], subjects[-1]
        base_zero = fit_zero.baseline_log_relative(analyst).subtract(
            fit_zero.baseline_log_relative(consumer)
        )
        base_two = fit_two.baseline_log_relative(analyst).subtract(
            fit_two.baseline_log_relative(consumer)
        )
        realigned = re_reference(base_two, 0)
        gap = np.abs(
            np.asarray(realigned.values) - np.asarray(base_zero.values)
        )
        assert gap.max() <= 1e-9


def test_criterion_8_csv_pipeline_dimensions():
    with criterion(8, "26-subject case-study pipeline, lossless round trip"):
        principles = default_principles()
        group_sizes = [4, 4, 4, 4, 4, 3, 3]  # 7 groups, 26 subjects
        assert sum(group_sizes) == 26
        rng = np.random.default_rng(808)
        rows = []
        for g, size in enumerate(group_sizes):
            group = f"g{g + 1}"
            mean_values = rng.normal(0.0, 0.4, principles.size)
            mean_values[0] = 0.0
            for m in range(size):
                subject = f"{group}s{m + 1}"
                delta = rng.normal(0.0, 0.15, principles.size)
                delta[0] = 0.0
                phi = rng.normal(0.0, 0.25, principles.size)
                phi[0] = 0.0
                rows.append(
                    (
                        subject, group, "analyst", "baseline", principles.names,
                        weights_from_log_relative(mean_values + delta),
                    )
                )
                rows.append(
                    (
                        subject, group, "analyst", "resolution", principles.names,
                        weights_from_log_relative(mean_values + delta + phi),
                    )
                )
        text = survey_csv(rows)
        records = ingest(io.StringIO(text), principles)
        assert len(records) == 52  # 26 subjects x 2 stages
        result = fit(records)
        figure_rows = emit_figure_data(records, result, principles)
        subject_rows = [r for r in figure_rows if r["kind"] == "subject"]
        group_rows = [r for r in figure_rows if r["kind"] == "group_mean"]
        assert len(subject_rows) == 312
        assert len(group_rows) == 42

        buffer = io.StringIO()
        write_figure_csv(figure_rows, buffer)
        buffer.seek(0)
        reread = ingest(buffer, principles)
        original = {(r.subject_id, r.stage): r.allocations.weights for r in records}
        assert len(reread) == len(records)
        for record in reread:
            gap = np.abs(
                np.asarray(record.allocations.weights)
                - np.asarray(original[(record.subject_id, record.stage)])
            )
            assert gap.max() <= 1e-9


def test_criterion_9_service_contract(tmp_path, monkeypatch):
    with criterion(9, "session lifecycle, conflict statuses, crash atomicity"):
        data_dir = tmp_path / "sessions"
        client = TestClient(create_app(data_dir))
        created = client.post(
            "/api/sessions",
            json={"principles": ["a", "b", "c"], "epsilon": 0.1, "p": 2.0},
        )
        assert created.status_code == 201
        session_id = created.json()["session_id"]

        # resolution before negotiation: documented conflict status
        early = client.post(
            f"/api/sessions/{session_id}/parties/analyst/allocations",
            json={"stage": "resolution", "weights": [0.5, 0.3, 0.2]},
        )
        assert early.status_code == 409

        for role, weights in (
            ("analyst", [0.5, 0.3, 0.2]),
            ("consumer", [0.3, 0.5, 0.2]),
        ):
            response = client.post(
                f"/api/sessions/{session_id}/parties/{role}/allocations",
                json={"stage": "baseline", "weights": weights},
            )
            assert response.status_code == 200

        # baseline after auto-advance: another conflict
        late = client.post(
            f"/api/sessions/{session_id}/parties/analyst/allocations",
            json={"stage": "baseline", "weights": [0.5, 0.3, 0.2]},
        )
        assert late.status_code == 409

        suggestion = client.post(
            f"/api/sessions/{session_id}/suggest",
            json={"gamma_a": 0.5, "gamma_c": 0.5},
        ).json()
        for role, weights in (
            ("analyst", suggestion["analyst_weights"]),
            ("consumer", suggestion["consumer_weights"]),
        ):
            response = client.post(
                f"/api/sessions/{session_id}/parties/{role}/allocations",
                json={"stage": "resolution", "weights": weights},
            )
            assert response.status_code == 200
        view = client.get(f"/api/sessions/{session_id}").json()
        assert view["stage"] == "resolution"
        assert max(abs(v) for v in view["resolution"]["overall"]) <= 1e-9
        assert view["resolution"]["verdict"]["strong"] is True
        assert view["resolution"]["verdict"]["epsilon"] == 0.1

        export = client.get(f"/api/sessions/{session_id}/export")
        assert export.status_code == 200
        assert len(export.text.strip().splitlines()) == 1 + 4 * 3

        # crash between temp write and rename must preserve the previous state
        before = SessionStore(data_dir).load(session_id)

        def explode(src, dst):
            raise RuntimeError("simulated crash before rename")

        monkeypatch.setattr(alignkit.store.os, "replace", explode)
        with pytest.raises(RuntimeError, match="simulated crash"):
            # TestClient re-raises server-side exceptions
            client.post(
                f"/api/sessions/{session_id}/advance", json={"to_stage": "closed"}
            )
        monkeypatch.undo()
        after = SessionStore(data_dir).load(session_id)
        assert after == before
        assert after["stage"] == "resolution"

"""Tests for session persistence, the stage machine, and the HTTP API."""

import io

import numpy as np
import pytest
from fastapi.testclient import TestClient

import alignkit.store
from alignkit.errors import StageOrderError, UnknownSessionError
from alignkit.estimation import fit, ingest
from alignkit.principles import PrincipleSet, Role, Stage, log_relative
from alignkit.service import create_app
from alignkit.sessions import SessionRecord, SessionService, SessionStage
from alignkit.store import SessionStore

ABC = ["alpha", "beta", "gamma"]


@pytest.fixture
def service(tmp_path):
    return SessionService(SessionStore(tmp_path / "sessions"))


@pytest.fixture
def client(tmp_path):
    app = create_app(tmp_path / "sessions")
    return TestClient(app)


class TestStore:
    def test_save_and_load(self, tmp_path):
        store = SessionStore(tmp_path / "data")
        store.save("abc123", {"x": 1})
        assert store.load("abc123") == {"x": 1}
        assert store.list_ids() == ["abc123"]

    def test_unknown_session(self, tmp_path):
        store = SessionStore(tmp_path / "data")
        with pytest.raises(UnknownSessionError):
            store.load("missing")

    def test_weird_ids_rejected(self, tmp_path):
        store = SessionStore(tmp_path / "data")
        with pytest.raises(UnknownSessionError):
            store.load("../../etc/passwd")

    def test_crash_between_write_and_rename_keeps_previous_state(
        self, tmp_path, monkeypatch
    ):
        store = SessionStore(tmp_path / "data")
        store.save("abc", {"stage": "before"})

        def explode(src, dst):
            raise RuntimeError("simulated crash before rename")

        monkeypatch.setattr(alignkit.store.os, "replace", explode)
        with pytest.raises(RuntimeError):
            store.save("abc", {"stage": "after"})
        monkeypatch.undo()
        assert store.load("abc") == {"stage": "before"}

    def test_temp_files_do_not_pollute_listing(self, tmp_path):
        store = SessionStore(tmp_path / "data")
        store.save("abc", {"x": 1})
        (tmp_path / "data" / "abc.json.tmp").write_text("{}", encoding="utf-8")
        assert store.list_ids() == ["abc"]


class TestSessionService:
    def test_create_defaults_to_six_principles(self, service):
        record = service.create()
        assert record.principles.size == 6
        assert record.stage is SessionStage.BASELINE
        assert record.epsilon == 0.1
        assert record.p == 2.0

    def test_create_rejects_single_principle(self, service):
        with pytest.raises(ValueError):
            service.create(["only"])

    def test_distinct_session_ids(self, service):
        assert service.create().session_id != service.create().session_id

    def test_record_round_trips_through_json(self, service):
        record = service.create(ABC, epsilon=0.2, p=3.0)
        service.submit(record.session_id, "analyst", "baseline", [0.2, 0.3, 0.5])
        service.submit(record.session_id, "consumer", "baseline", [0.2, 0.3, 0.5])
        loaded = service.get(record.session_id)
        assert loaded.to_dict() == service.get(record.session_id).to_dict()
        rebuilt = SessionRecord.from_dict(loaded.to_dict())
        assert rebuilt.to_dict() == loaded.to_dict()

    def test_baseline_flow_computes_difference_and_advances(self, service):
        record = service.create(ABC)
        partial = service.submit(
            record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2]
        )
        assert partial.stage is SessionStage.BASELINE
        assert partial.baseline_metrics is None
        complete = service.submit(
            record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2]
        )
        assert complete.stage is SessionStage.NEGOTIATION
        np.testing.assert_allclose(
            complete.baseline_metrics.difference.values,
            (0.0, -1.0216512475319814, -0.5108256237659907),
            atol=1e-12,
        )

    def test_identical_baselines_are_strongly_aligned(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.2, 0.3, 0.5])
        done = service.submit(record.session_id, "consumer", "baseline", [0.2, 0.3, 0.5])
        assert done.baseline_metrics.difference.values == (0.0, 0.0, 0.0)
        assert done.baseline_metrics.verdict.strong

    def test_baseline_resubmission_before_completion_replaces(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.2, 0.3, 0.5])
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        loaded = service.get(record.session_id)
        assert loaded.submission(Role.ANALYST, Stage.BASELINE).weights == (
            0.5,
            0.3,
            0.2,
        )

    def test_baseline_submission_after_negotiation_is_a_stage_violation(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.2, 0.3, 0.5])
        service.submit(record.session_id, "consumer", "baseline", [0.2, 0.3, 0.5])
        with pytest.raises(StageOrderError):
            service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])

    def test_resolution_before_negotiation_is_a_stage_violation(self, service):
        record = service.create(ABC)
        with pytest.raises(StageOrderError):
            service.submit(record.session_id, "analyst", "resolution", [0.2, 0.3, 0.5])

    def test_simplex_violation_reports_row_sum(self, service):
        record = service.create(ABC)
        with pytest.raises(ValueError, match="0.9"):
            service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.1])

    def test_resolutions_complete_the_session(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        middle = [0.4, 0.4, 0.2]
        service.submit(record.session_id, "analyst", "resolution", middle)
        done = service.submit(record.session_id, "consumer", "resolution", middle)
        assert done.stage is SessionStage.RESOLUTION
        metrics = done.resolution_metrics
        np.testing.assert_allclose(metrics.overall.values, (0.0, 0.0, 0.0), atol=1e-12)
        assert metrics.verdict.strong

    def test_resolution_metrics_identity(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        service.submit(record.session_id, "analyst", "resolution", [0.45, 0.35, 0.2])
        done = service.submit(record.session_id, "consumer", "resolution", [0.35, 0.45, 0.2])
        metrics = done.resolution_metrics
        for b, r, d in zip(
            done.baseline_metrics.difference.values,
            metrics.residual.values,
            metrics.overall.values,
        ):
            assert d == b + r

    def test_resubmitting_identical_resolution_is_idempotent(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        service.submit(record.session_id, "analyst", "resolution", [0.4, 0.4, 0.2])
        first = service.submit(
            record.session_id, "consumer", "resolution", [0.4, 0.4, 0.2]
        )
        second = service.submit(
            record.session_id, "consumer", "resolution", [0.4, 0.4, 0.2]
        )
        assert (
            first.resolution_metrics.overall.values
            == second.resolution_metrics.overall.values
        )
        assert first.baseline_metrics.difference.values == (
            second.baseline_metrics.difference.values
        )

    def test_advance_requires_immediate_successor(self, service):
        record = service.create(ABC)
        with pytest.raises(StageOrderError):
            service.advance(record.session_id, "resolution")
        with pytest.raises(StageOrderError):
            service.advance(record.session_id, "negotiation")  # baselines missing

    def test_advance_fills_missing_resolution_with_baseline(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        advanced = service.advance(record.session_id, "resolution")
        assert advanced.stage is SessionStage.RESOLUTION
        metrics = advanced.resolution_metrics
        assert metrics.analyst_adjustment.values == (0.0, 0.0, 0.0)
        assert metrics.consumer_adjustment.values == (0.0, 0.0, 0.0)
        assert metrics.overall.values == advanced.baseline_metrics.difference.values

    def test_closed_sessions_reject_submissions(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        service.advance(record.session_id, "resolution")
        service.advance(record.session_id, "closed")
        with pytest.raises(StageOrderError):
            service.submit(record.session_id, "analyst", "resolution", [0.4, 0.4, 0.2])

    def test_suggest_meet_in_the_middle_predicts_zero(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        suggestion = service.suggest(record.session_id, 0.5, 0.5)
        assert suggestion["predicted_D"] == [0.0, 0.0, 0.0]
        assert suggestion["predicted_verdict"]["strong"]

    def test_suggest_full_concession_matches_other_party(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        suggestion = service.suggest(record.session_id, 1.0, 0.0)
        np.testing.assert_allclose(
            suggestion["analyst_weights"], (0.3, 0.5, 0.2), atol=1e-12
        )
        np.testing.assert_allclose(
            suggestion["consumer_weights"], (0.3, 0.5, 0.2), atol=1e-12
        )

    def test_suggest_zero_concessions_keep_baselines(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        suggestion = service.suggest(record.session_id, 0.0, 0.0)
        np.testing.assert_allclose(
            suggestion["analyst_weights"], (0.5, 0.3, 0.2), atol=1e-12
        )
        np.testing.assert_allclose(
            suggestion["consumer_weights"], (0.3, 0.5, 0.2), atol=1e-12
        )

    def test_suggest_requires_baselines(self, service):
        record = service.create(ABC)
        with pytest.raises(StageOrderError):
            service.suggest(record.session_id, 0.5, 0.5)

    def test_suggest_validates_concessions(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        with pytest.raises(ValueError):
            service.suggest(record.session_id, 1.2, 0.0)

    def test_adopting_suggestions_yields_predicted_alignment(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        suggestion = service.suggest(record.session_id, 0.5, 0.5)
        service.submit(
            record.session_id, "analyst", "resolution", suggestion["analyst_weights"]
        )
        done = service.submit(
            record.session_id, "consumer", "resolution", suggestion["consumer_weights"]
        )
        gap = max(abs(v) for v in done.resolution_metrics.overall.values)
        assert gap <= 1e-9

    def test_export_counts_and_round_trip(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        service.submit(record.session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        service.submit(record.session_id, "analyst", "resolution", [0.4, 0.4, 0.2])
        service.submit(record.session_id, "consumer", "resolution", [0.4, 0.4, 0.2])
        text = service.export_csv(record.session_id)
        lines = text.strip().splitlines()
        assert len(lines) == 1 + 4 * 3  # header + (2 roles x 2 stages) x K

        principles = PrincipleSet(tuple(ABC))
        records = ingest(io.StringIO(text), principles)
        result = fit(records)
        fitted = result.baseline_log_relative("analyst")
        direct = log_relative((0.5, 0.3, 0.2), 0)
        np.testing.assert_allclose(fitted.values, direct.values, atol=1e-9)

    def test_export_baseline_only(self, service):
        record = service.create(ABC)
        service.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        text = service.export_csv(record.session_id)
        assert len(text.strip().splitlines()) == 1 + 3

    def test_export_counts_with_default_principles(self, service):
        record = service.create()  # built-in six principles
        sixths = [1 / 6] * 6
        tilted = [0.25, 0.15, 0.15, 0.15, 0.15, 0.15]
        service.submit(record.session_id, "analyst", "baseline", sixths)
        service.submit(record.session_id, "consumer", "baseline", tilted)
        baseline_only = service.export_csv(record.session_id)
        assert len(baseline_only.strip().splitlines()) == 1 + 12  # 2 roles x 6
        service.submit(record.session_id, "analyst", "resolution", tilted)
        service.submit(record.session_id, "consumer", "resolution", tilted)
        full = service.export_csv(record.session_id)
        assert len(full.strip().splitlines()) == 1 + 24  # 2 roles x 2 stages x 6

    def test_persistence_across_service_instances(self, tmp_path):
        store_dir = tmp_path / "sessions"
        first = SessionService(SessionStore(store_dir))
        record = first.create(ABC)
        first.submit(record.session_id, "analyst", "baseline", [0.5, 0.3, 0.2])
        second = SessionService(SessionStore(store_dir))
        loaded = second.get(record.session_id)
        assert loaded.submission(Role.ANALYST, Stage.BASELINE).weights == (
            0.5,
            0.3,
            0.2,
        )


class TestHttpApi:
    def create_session(self, client, **overrides):
        payload = {"principles": ABC, "epsilon": 0.1, "p": 2.0}
        payload.update(overrides)
        response = client.post("/api/sessions", json=payload)
        assert response.status_code == 201
        return response.json()["session_id"]

    def submit(self, client, session_id, role, stage, weights):
        return client.post(
            f"/api/sessions/{session_id}/parties/{role}/allocations",
            json={"stage": stage, "weights": weights},
        )

    def test_create_returns_201_with_stage(self, client):
        response = client.post("/api/sessions", json={})
        assert response.status_code == 201
        body = response.json()
        assert body["stage"] == "baseline"
        assert len(body["session_id"]) == 32

    def test_create_rejects_one_principle(self, client):
        response = client.post("/api/sessions", json={"principles": ["solo"]})
        assert response.status_code == 422

    def test_full_lifecycle(self, client):
        session_id = self.create_session(client)
        assert self.submit(client, session_id, "analyst", "baseline", [0.5, 0.3, 0.2]).status_code == 200
        response = self.submit(client, session_id, "consumer", "baseline", [0.3, 0.5, 0.2])
        assert response.status_code == 200
        body = response.json()
        assert body["stage"] == "negotiation"
        assert body["baseline"]["verdict"]["strong"] is False

        suggestion = client.post(
            f"/api/sessions/{session_id}/suggest",
            json={"gamma_a": 0.5, "gamma_c": 0.5},
        )
        assert suggestion.status_code == 200
        suggested = suggestion.json()
        assert suggested["predicted_D"] == [0.0, 0.0, 0.0]

        self.submit(client, session_id, "analyst", "resolution", suggested["analyst_weights"])
        done = self.submit(
            client, session_id, "consumer", "resolution", suggested["consumer_weights"]
        )
        body = done.json()
        assert body["stage"] == "resolution"
        assert max(abs(v) for v in body["resolution"]["overall"]) <= 1e-9
        assert body["resolution"]["verdict"]["strong"] is True

        export = client.get(f"/api/sessions/{session_id}/export")
        assert export.status_code == 200
        assert export.headers["content-type"].startswith("text/csv")
        assert len(export.text.strip().splitlines()) == 1 + 4 * 3

    def test_get_full_view(self, client):
        session_id = self.create_session(client)
        view = client.get(f"/api/sessions/{session_id}").json()
        assert view["principles"]["names"] == ABC
        assert view["baseline"] is None

    def test_stage_violation_is_409(self, client):
        session_id = self.create_session(client)
        response = self.submit(client, session_id, "analyst", "resolution", [0.5, 0.3, 0.2])
        assert response.status_code == 409

    def test_simplex_violation_is_422_with_sum(self, client):
        session_id = self.create_session(client)
        response = self.submit(client, session_id, "analyst", "baseline", [0.5, 0.3, 0.1])
        assert response.status_code == 422
        assert "0.9" in response.json()["detail"]

    def test_unknown_session_is_404(self, client):
        response = client.get("/api/sessions/deadbeef")
        assert response.status_code == 404

    def test_unknown_role_is_422(self, client):
        session_id = self.create_session(client)
        response = self.submit(client, session_id, "referee", "baseline", [0.5, 0.3, 0.2])
        assert response.status_code == 422

    def test_advance_violation_is_409(self, client):
        session_id = self.create_session(client)
        response = client.post(
            f"/api/sessions/{session_id}/advance", json={"to_stage": "resolution"}
        )
        assert response.status_code == 409

    def test_suggest_before_baselines_is_409(self, client):
        session_id = self.create_session(client)
        response = client.post(
            f"/api/sessions/{session_id}/suggest", json={"gamma_a": 0.5, "gamma_c": 0.5}
        )
        assert response.status_code == 409

"""Record HTTP fixtures for the workbench contract tests.

Drives the real session service in-process and dumps selected responses as
JSON under frontend/test/fixtures/. Rerun after changing response shapes:

    python3 scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import math
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from alignkit.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"


def dump(name: str, payload) -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / name).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {name}")


def softmax_weights(log_values):
    exps = [math.exp(v) for v in log_values]
    total = sum(exps)
    return [e / total for e in exps]


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        client = TestClient(create_app(tmp))

        # canonical session: distinct baselines, meet-in-the-middle resolution
        created = client.post(
            "/api/sessions",
            json={"principles": ["a", "b", "c"], "epsilon": 0.1, "p": 2.0},
        )
        dump("created.json", created.json())
        session_id = created.json()["session_id"]

        dump(
            "baseline_empty.json",
            client.get(f"/api/sessions/{session_id}").json(),
        )

        client.post(
            f"/api/sessions/{session_id}/parties/analyst/allocations",
            json={"stage": "baseline", "weights": [0.5, 0.3, 0.2]},
        )
        dump(
            "baseline_partial.json",
            client.get(f"/api/sessions/{session_id}").json(),
        )

        client.post(
            f"/api/sessions/{session_id}/parties/consumer/allocations",
            json={"stage": "baseline", "weights": [0.3, 0.5, 0.2]},
        )
        dump("negotiation.json", client.get(f"/api/sessions/{session_id}").json())

        suggest_half = client.post(
            f"/api/sessions/{session_id}/suggest",
            json={"gamma_a": 0.5, "gamma_c": 0.5},
        ).json()
        dump("suggest_half.json", suggest_half)
        dump(
            "suggest_full_both.json",
            client.post(
                f"/api/sessions/{session_id}/suggest",
                json={"gamma_a": 1.0, "gamma_c": 1.0},
            ).json(),
        )
        dump(
            "suggest_zero.json",
            client.post(
                f"/api/sessions/{session_id}/suggest",
                json={"gamma_a": 0.0, "gamma_c": 0.0},
            ).json(),
        )

        client.post(
            f"/api/sessions/{session_id}/parties/analyst/allocations",
            json={"stage": "resolution", "weights": suggest_half["analyst_weights"]},
        )
        dump(
            "resolution_partial.json",
            client.get(f"/api/sessions/{session_id}").json(),
        )
        client.post(
            f"/api/sessions/{session_id}/parties/consumer/allocations",
            json={"stage": "resolution", "weights": suggest_half["consumer_weights"]},
        )
        dump("resolution.json", client.get(f"/api/sessions/{session_id}").json())

        client.post(
            f"/api/sessions/{session_id}/advance", json={"to_stage": "closed"}
        )
        dump("closed.json", client.get(f"/api/sessions/{session_id}").json())

        # session tuned so the baseline difference is (0, 0.3, -0.4) with
        # epsilon 0.35: weakly but not strongly aligned
        mixed = client.post(
            "/api/sessions",
            json={"principles": ["a", "b", "c"], "epsilon": 0.35, "p": 2.0},
        ).json()
        mixed_id = mixed["session_id"]
        client.post(
            f"/api/sessions/{mixed_id}/parties/analyst/allocations",
            json={
                "stage": "baseline",
                "weights": softmax_weights([0.0, 0.15, -0.2]),
            },
        )
        client.post(
            f"/api/sessions/{mixed_id}/parties/consumer/allocations",
            json={
                "stage": "baseline",
                "weights": softmax_weights([0.0, -0.15, 0.2]),
            },
        )
        dump("negotiation_mixed.json", client.get(f"/api/sessions/{mixed_id}").json())

        # stage conflict body, for surfacing server errors verbatim
        conflict = client.post(
            f"/api/sessions/{mixed_id}/parties/analyst/allocations",
            json={"stage": "baseline", "weights": [0.5, 0.3, 0.2]},
        )
        dump(
            "conflict_409.json",
            {"status": conflict.status_code, "body": conflict.json()},
        )


if __name__ == "__main__":
    main()

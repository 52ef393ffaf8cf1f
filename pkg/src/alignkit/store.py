"""File-backed persistence: one JSON document per session, written atomically.

Documents are written to a temporary file in the same directory and renamed
into place, so a reader never observes a torn state: after any crash the file
holds either the previous or the new complete document.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import UnknownSessionError


def atomic_write_json(path: Path, payload: dict) -> None:
    """Write JSON durably: temp file, flush, fsync, rename."""
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp, path)


class SessionStore:
    """Maps session ids to JSON documents under a data directory."""

    def __init__(self, data_dir: str | Path) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, session_id: str) -> Path:
        if not session_id or not session_id.isalnum():
            raise UnknownSessionError(session_id)
        return self.data_dir / f"{session_id}.json"

    def save(self, session_id: str, payload: dict) -> None:
        atomic_write_json(self.path_for(session_id), payload)

    def load(self, session_id: str) -> dict:
        path = self.path_for(session_id)
        if not path.exists():
            raise UnknownSessionError(session_id)
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)

    def exists(self, session_id: str) -> bool:
        try:
            return self.path_for(session_id).exists()
        except UnknownSessionError:
            return False

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.json"))

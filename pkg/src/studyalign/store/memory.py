"""Embedded store: in-memory dicts, optionally mirrored to a JSON file."""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Optional

from ..model import (
    AdminAccount,
    BatchRecord,
    Invite,
    LogEvent,
    Participant,
    Procedure,
    ProcedureConfig,
    Study,
)
from . import Store


class MemoryStore(Store):
    def __init__(self):
        self._lock = threading.RLock()
        self._admins: dict[str, AdminAccount] = {}
        self._studies: dict[str, Study] = {}
        self._configs: dict[str, ProcedureConfig] = {}
        self._procedures: dict[str, list[Procedure]] = {}
        self._participants: dict[str, Participant] = {}
        self._invites: dict[str, Invite] = {}
        self._events: list[LogEvent] = []
        self._batches: dict[tuple[str, str], BatchRecord] = {}
        self._archives: dict[str, list[dict]] = {}
        self._next_event_id = 1

    # -- admins --
    def put_admin(self, admin: AdminAccount) -> None:
        with self._lock:
            self._admins[admin.id] = admin.model_copy(deep=True)
            self._flush()

    def get_admin_by_email(self, email: str) -> Optional[AdminAccount]:
        with self._lock:
            for admin in self._admins.values():
                if admin.email == email:
                    return admin.model_copy(deep=True)
        return None

    # -- studies --
    def put_study(self, study: Study) -> None:
        with self._lock:
            self._studies[study.id] = study.model_copy(deep=True)
            self._flush()

    def get_study(self, study_id: str) -> Optional[Study]:
        with self._lock:
            study = self._studies.get(study_id)
            return study.model_copy(deep=True) if study else None

    def list_studies(self) -> list[Study]:
        with self._lock:
            return [s.model_copy(deep=True) for s in self._studies.values()]

    # -- configs --
    def put_config(self, study_id: str, config: ProcedureConfig) -> None:
        with self._lock:
            self._configs[study_id] = config.model_copy(deep=True)
            self._flush()

    def get_config(self, study_id: str) -> Optional[ProcedureConfig]:
        with self._lock:
            config = self._configs.get(study_id)
            return config.model_copy(deep=True) if config else None

    # -- procedures --
    def put_procedures(self, study_id: str, procedures: list[Procedure]) -> None:
        with self._lock:
            self._procedures[study_id] = [p.model_copy(deep=True) for p in procedures]
            self._flush()

    def get_procedures(self, study_id: str) -> list[Procedure]:
        with self._lock:
            return [p.model_copy(deep=True) for p in self._procedures.get(study_id, [])]

    def get_procedure(self, procedure_id: str) -> Optional[Procedure]:
        with self._lock:
            for procedures in self._procedures.values():
                for procedure in procedures:
                    if procedure.id == procedure_id:
                        return procedure.model_copy(deep=True)
        return None

    # -- participants --
    def put_participant(self, participant: Participant) -> None:
        with self._lock:
            self._participants[participant.uuid] = participant.model_copy(deep=True)
            self._flush()

    def get_participant(self, uuid: str) -> Optional[Participant]:
        with self._lock:
            participant = self._participants.get(uuid)
            return participant.model_copy(deep=True) if participant else None

    def list_participants(self, study_id: str) -> list[Participant]:
        with self._lock:
            rows = [p for p in self._participants.values() if p.study_id == study_id]
            rows.sort(key=lambda p: p.join_index)
            return [p.model_copy(deep=True) for p in rows]

    # -- invites --
    def put_invite(self, invite: Invite) -> None:
        with self._lock:
            self._invites[invite.token] = invite.model_copy(deep=True)
            self._flush()

    def get_invite(self, token: str) -> Optional[Invite]:
        with self._lock:
            invite = self._invites.get(token)
            return invite.model_copy(deep=True) if invite else None

    # -- log events --
    def append_events(self, events: list[LogEvent], batch: Optional[BatchRecord] = None) -> list[LogEvent]:
        with self._lock:
            stored: list[LogEvent] = []
            for event in events:
                copy = event.model_copy(deep=True)
                copy.id = self._next_event_id
                self._next_event_id += 1
                self._events.append(copy)
                stored.append(copy.model_copy(deep=True))
            if batch is not None:
                record = batch.model_copy(deep=True)
                record.event_ids = [e.id for e in stored]
                self._batches[(record.participant_uuid, record.client_batch_id)] = record
            self._flush()
            return stored

    def events_for_study(
        self,
        study_id: str,
        *,
        condition_id: Optional[str] = None,
        include_quarantined: bool = False,
    ) -> list[LogEvent]:
        with self._lock:
            rows = [e for e in self._events if e.study_id == study_id]
            if condition_id is not None:
                rows = [e for e in rows if e.condition_id == condition_id]
            if not include_quarantined:
                rows = [e for e in rows if not e.quarantined]
            return [e.model_copy(deep=True) for e in rows]

    def count_events(self, study_id: str) -> int:
        with self._lock:
            return sum(1 for e in self._events if e.study_id == study_id)

    def get_batch(self, participant_uuid: str, client_batch_id: str) -> Optional[BatchRecord]:
        with self._lock:
            record = self._batches.get((participant_uuid, client_batch_id))
            return record.model_copy(deep=True) if record else None

    # -- archives --
    def put_archive(self, study_id: str, rows: list[dict]) -> None:
        with self._lock:
            self._archives[study_id] = json.loads(json.dumps(rows))
            self._flush()

    def get_archive(self, study_id: str) -> list[dict]:
        with self._lock:
            return json.loads(json.dumps(self._archives.get(study_id, [])))

    # -- snapshotting (FileStore overrides) --
    def _flush(self) -> None:
        pass

    def _snapshot(self) -> dict:
        return {
            "admins": [a.model_dump(mode="json") for a in self._admins.values()],
            "studies": [s.model_dump(mode="json") for s in self._studies.values()],
            "configs": {k: c.model_dump(mode="json") for k, c in self._configs.items()},
            "procedures": {k: [p.model_dump(mode="json") for p in v] for k, v in self._procedures.items()},
            "participants": [p.model_dump(mode="json") for p in self._participants.values()],
            "invites": [i.model_dump(mode="json") for i in self._invites.values()],
            "events": [e.model_dump(mode="json") for e in self._events],
            "batches": [b.model_dump(mode="json") for b in self._batches.values()],
            "archives": self._archives,
            "next_event_id": self._next_event_id,
        }

    def _restore(self, data: dict) -> None:
        self._admins = {a["id"]: AdminAccount.model_validate(a) for a in data.get("admins", [])}
        self._studies = {s["id"]: Study.model_validate(s) for s in data.get("studies", [])}
        self._configs = {k: ProcedureConfig.model_validate(c) for k, c in data.get("configs", {}).items()}
        self._procedures = {
            k: [Procedure.model_validate(p) for p in v] for k, v in data.get("procedures", {}).items()
        }
        self._participants = {p["uuid"]: Participant.model_validate(p) for p in data.get("participants", [])}
        self._invites = {i["token"]: Invite.model_validate(i) for i in data.get("invites", [])}
        self._events = [LogEvent.model_validate(e) for e in data.get("events", [])]
        self._batches = {
            (b["participant_uuid"], b["client_batch_id"]): BatchRecord.model_validate(b)
            for b in data.get("batches", [])
        }
        self._archives = data.get("archives", {})
        self._next_event_id = data.get("next_event_id", 1)


class FileStore(MemoryStore):
    """MemoryStore persisted to a JSON file after every mutation.

    Writes go to a temp file followed by an atomic rename, so a crash
    mid-write never corrupts the snapshot.
    """

    def __init__(self, path: str | os.PathLike):
        super().__init__()
        self._path = Path(path)
        if self._path.exists():
            self._restore(json.loads(self._path.read_text(encoding="utf-8")))

    def _flush(self) -> None:
        tmp = self._path.with_suffix(self._path.suffix + ".tmp")
        tmp.write_text(json.dumps(self._snapshot()), encoding="utf-8")
        tmp.replace(self._path)

"""Interaction log ingestion, preview, and CSV export.

Storage is append-only. Events arriving for a condition the
participant already left (late buffer flushes are expected) are
quarantined and flagged, never silently dropped; quarantined rows are
excluded from CSV exports but visible in previews.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Iterator, Optional

from .clock import Clock
from .errors import ValidationFailure
from .model import BatchRecord, LogEvent, Participant, Procedure
from .store import Store

CSV_HEADER = [
    "event_id",
    "participant_uuid",
    "study_id",
    "condition_id",
    "event_type",
    "client_timestamp",
    "received_at",
    "native_event",
    "custom",
]

DEFAULT_MAX_BATCH_SIZE = 500
DEFAULT_MAX_EVENT_BYTES = 64 * 1024


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class LogService:
    def __init__(
        self,
        store: Store,
        clock: Clock,
        *,
        max_batch_size: int = DEFAULT_MAX_BATCH_SIZE,
        max_event_bytes: int = DEFAULT_MAX_EVENT_BYTES,
    ):
        self._store = store
        self._clock = clock
        self.max_batch_size = max_batch_size
        self.max_event_bytes = max_event_bytes

    # -- validation --

    def _check_payload(self, payload: dict) -> None:
        native = payload.get("native_event")
        custom = payload.get("custom")
        if native is None and custom is None:
            raise ValidationFailure("event must carry a native_event or a custom payload")
        for name, doc in (("native_event", native), ("custom", custom)):
            if doc is not None and not isinstance(doc, dict):
                raise ValidationFailure(f"{name} must be a structured document")
        if not payload.get("event_type"):
            raise ValidationFailure("event_type is required")
        if not isinstance(payload.get("client_timestamp"), int):
            raise ValidationFailure("client_timestamp must be integer milliseconds since epoch")
        size = len(canonical_json({"native_event": native, "custom": custom}).encode("utf-8"))
        if size > self.max_event_bytes:
            raise ValidationFailure(
                f"event payload exceeds {self.max_event_bytes} bytes",
                code="payload_too_large",
                detail={"limit_bytes": self.max_event_bytes, "size_bytes": size},
            )

    @staticmethod
    def _quarantine_reason(participant: Participant, procedure: Procedure, condition_id: str) -> Optional[str]:
        if participant.progress >= len(procedure.steps):
            return "event outside active condition: participant finished the study"
        element = procedure.steps[participant.progress].element
        if element.type != "condition":
            return "event outside active condition: current step is not a condition"
        if element.id != condition_id:
            return "event outside active condition: condition does not match current step"
        return None

    def _build_event(
        self, participant: Participant, condition_id: str, payload: dict, reason: Optional[str]
    ) -> LogEvent:
        return LogEvent(
            study_id=participant.study_id,
            participant_uuid=participant.uuid,
            condition_id=condition_id,
            event_type=payload["event_type"],
            client_timestamp=payload["client_timestamp"],
            received_at=self._clock.now(),
            native_event=payload.get("native_event"),
            custom=payload.get("custom"),
            quarantined=reason is not None,
            quarantine_reason=reason,
        )

    # -- ingestion --

    def ingest_single(self, participant: Participant, procedure: Procedure, payload: dict) -> LogEvent:
        self._check_payload(payload)
        condition_id = payload.get("condition_id") or ""
        if not condition_id:
            raise ValidationFailure("condition_id is required")
        reason = self._quarantine_reason(participant, procedure, condition_id)
        event = self._build_event(participant, condition_id, payload, reason)
        return self._store.append_events([event])[0]

    def ingest_batch(self, participant: Participant, procedure: Procedure, batch: dict) -> dict:
        client_batch_id = batch.get("client_batch_id") or ""
        if not client_batch_id:
            raise ValidationFailure("client_batch_id is required")
        events = batch.get("events")
        if not isinstance(events, list) or not events:
            raise ValidationFailure("batch must contain at least 1 event")
        if len(events) > self.max_batch_size:
            raise ValidationFailure(
                f"batch exceeds the maximum of {self.max_batch_size} events",
                code="batch_too_large",
                detail={"limit": self.max_batch_size, "size": len(events)},
            )
        existing = self._store.get_batch(participant.uuid, client_batch_id)
        if existing is not None:
            return {"accepted": existing.accepted_count, "replayed": True, "quarantined": False}

        condition_id = batch.get("condition_id") or ""
        if not condition_id:
            raise ValidationFailure("condition_id is required")
        for payload in events:
            self._check_payload(payload)
        reason = self._quarantine_reason(participant, procedure, condition_id)
        rows = [self._build_event(participant, condition_id, payload, reason) for payload in events]
        record = BatchRecord(
            participant_uuid=participant.uuid,
            client_batch_id=client_batch_id,
            accepted_count=len(rows),
        )
        self._store.append_events(rows, batch=record)
        return {"accepted": len(rows), "replayed": False, "quarantined": reason is not None}

    # -- export / preview --

    def export_csv(self, study_id: str, *, condition_id: Optional[str] = None) -> Iterator[bytes]:
        """Stream the study's non-quarantined events as RFC-4180 CSV."""
        events = self._store.events_for_study(study_id, condition_id=condition_id)
        events.sort(key=lambda e: (e.participant_uuid, e.client_timestamp, e.id))

        def encode_row(values: list[str]) -> bytes:
            buffer = io.StringIO()
            csv.writer(buffer, lineterminator="\n").writerow(values)
            return buffer.getvalue().encode("utf-8")

        yield encode_row(CSV_HEADER)
        for event in events:
            yield encode_row(
                [
                    str(event.id),
                    event.participant_uuid,
                    event.study_id,
                    event.condition_id,
                    event.event_type,
                    str(event.client_timestamp),
                    event.received_at.isoformat(),
                    canonical_json(event.native_event) if event.native_event is not None else "",
                    canonical_json(event.custom) if event.custom is not None else "",
                ]
            )

    def export_csv_bytes(self, study_id: str, *, condition_id: Optional[str] = None) -> bytes:
        return b"".join(self.export_csv(study_id, condition_id=condition_id))

    def export_rows(self, study_id: str) -> list[dict]:
        """All stored rows (including quarantined), for study documents."""
        events = self._store.events_for_study(study_id, include_quarantined=True)
        return [e.model_dump(mode="json") for e in events]

    def preview(self, study_id: str, page: int, page_size: int) -> dict:
        """Paged view ordered by event id.

        Ids are monotonic and storage append-only, so previously read
        pages never change under concurrent ingestion.
        """
        if page < 1 or page_size < 1:
            raise ValidationFailure("page and page_size must be >= 1")
        events = self._store.events_for_study(study_id, include_quarantined=True)
        start = (page - 1) * page_size
        chunk = events[start : start + page_size]
        return {
            "page": page,
            "page_size": page_size,
            "events": [e.model_dump(mode="json") for e in chunk],
            "has_more": start + page_size < len(events),
        }

"""Pluggable persistence.

Two backends ship with the platform: an embedded file-backed store for
tests and desk-scale deployments, and a relational store for server
deployments. Both satisfy the same contract; the service layer owns
all cross-entity concurrency control, so stores only need atomic
single-operation semantics (plus atomic event-batch appends).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
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


class Store(ABC):
    # -- admins --
    @abstractmethod
    def put_admin(self, admin: AdminAccount) -> None: ...

    @abstractmethod
    def get_admin_by_email(self, email: str) -> Optional[AdminAccount]: ...

    # -- studies --
    @abstractmethod
    def put_study(self, study: Study) -> None: ...

    @abstractmethod
    def get_study(self, study_id: str) -> Optional[Study]: ...

    @abstractmethod
    def list_studies(self) -> list[Study]: ...

    # -- procedure configs (one per study) --
    @abstractmethod
    def put_config(self, study_id: str, config: ProcedureConfig) -> None: ...

    @abstractmethod
    def get_config(self, study_id: str) -> Optional[ProcedureConfig]: ...

    # -- generated procedures --
    @abstractmethod
    def put_procedures(self, study_id: str, procedures: list[Procedure]) -> None: ...

    @abstractmethod
    def get_procedures(self, study_id: str) -> list[Procedure]: ...

    @abstractmethod
    def get_procedure(self, procedure_id: str) -> Optional[Procedure]: ...

    # -- participants --
    @abstractmethod
    def put_participant(self, participant: Participant) -> None: ...

    @abstractmethod
    def get_participant(self, uuid: str) -> Optional[Participant]: ...

    @abstractmethod
    def list_participants(self, study_id: str) -> list[Participant]: ...

    def count_participants(self, study_id: str) -> int:
        return len(self.list_participants(study_id))

    # -- invites --
    @abstractmethod
    def put_invite(self, invite: Invite) -> None: ...

    @abstractmethod
    def get_invite(self, token: str) -> Optional[Invite]: ...

    # -- log events (append-only) --
    @abstractmethod
    def append_events(self, events: list[LogEvent], batch: Optional[BatchRecord] = None) -> list[LogEvent]:
        """Atomically persist events (and the batch record, if given),
        assigning monotonically increasing ids. Returns stored copies."""

    @abstractmethod
    def events_for_study(
        self,
        study_id: str,
        *,
        condition_id: Optional[str] = None,
        include_quarantined: bool = False,
    ) -> list[LogEvent]:
        """Events ordered by id ascending."""

    @abstractmethod
    def count_events(self, study_id: str) -> int: ...

    @abstractmethod
    def get_batch(self, participant_uuid: str, client_batch_id: str) -> Optional[BatchRecord]: ...

    # -- imported log archives (read-only attachments) --
    @abstractmethod
    def put_archive(self, study_id: str, rows: list[dict]) -> None: ...

    @abstractmethod
    def get_archive(self, study_id: str) -> list[dict]: ...


from .memory import FileStore, MemoryStore  # noqa: E402
from .sql import SqlStore  # noqa: E402


def open_store(target: str) -> Store:
    """Open a store from a location string.

    SQLAlchemy URLs (``sqlite:///...``, ``postgresql://...``) open the
    relational backend; anything else is a JSON file path for the
    embedded store.
    """
    if "://" in target:
        return SqlStore(target)
    return FileStore(target)


__all__ = ["Store", "MemoryStore", "FileStore", "SqlStore", "open_store"]

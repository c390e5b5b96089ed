"""Relational store: entity tables with JSON columns for payloads.

Works against SQLite (tests, small deployments) and PostgreSQL
(server deployments) through SQLAlchemy. Datetimes are persisted as
ISO-8601 UTC strings so both backends order and round-trip them
identically.
"""

from __future__ import annotations

from datetime import datetime
from typing import Optional

from sqlalchemy import (
    JSON,
    BigInteger,
    Boolean,
    Integer,
    String,
    Text,
    create_engine,
    select,
    func,
)
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, sessionmaker
from sqlalchemy.pool import StaticPool

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


class Base(DeclarativeBase):
    pass


def _iso(value: Optional[datetime]) -> Optional[str]:
    return value.isoformat() if value is not None else None


def _dt(value: Optional[str]) -> Optional[datetime]:
    return datetime.fromisoformat(value) if value else None


class AdminRow(Base):
    __tablename__ = "admins"
    id: Mapped[str] = mapped_column(String(64), primary_key=True)
    email: Mapped[str] = mapped_column(String(255), unique=True, index=True)
    password_hash: Mapped[str] = mapped_column(Text)


class StudyRow(Base):
    __tablename__ = "studies"
    id: Mapped[str] = mapped_column(String(64), primary_key=True)
    title: Mapped[str] = mapped_column(Text)
    description: Mapped[str] = mapped_column(Text, default="")
    consent: Mapped[str] = mapped_column(Text, default="")
    start_date: Mapped[str] = mapped_column(String(40))
    end_date: Mapped[str] = mapped_column(String(40))
    planned_participants: Mapped[int] = mapped_column(Integer)
    access_mode: Mapped[str] = mapped_column(String(10))
    state: Mapped[str] = mapped_column(String(10))
    revision: Mapped[int] = mapped_column(Integer, default=0)


class ConfigRow(Base):
    __tablename__ = "procedure_configs"
    study_id: Mapped[str] = mapped_column(String(64), primary_key=True)
    doc: Mapped[dict] = mapped_column(JSON)


class ProcedureRow(Base):
    __tablename__ = "procedures"
    id: Mapped[str] = mapped_column(String(64), primary_key=True)
    study_id: Mapped[str] = mapped_column(String(64), index=True)
    variant_index: Mapped[int] = mapped_column(Integer)
    steps: Mapped[list] = mapped_column(JSON)


class ParticipantRow(Base):
    __tablename__ = "participants"
    uuid: Mapped[str] = mapped_column(String(64), primary_key=True)
    study_id: Mapped[str] = mapped_column(String(64), index=True)
    procedure_id: Mapped[str] = mapped_column(String(64))
    join_index: Mapped[int] = mapped_column(Integer)
    progress: Mapped[int] = mapped_column(Integer)
    state: Mapped[str] = mapped_column(String(16))
    logger_key: Mapped[str] = mapped_column(String(128))
    task_done: Mapped[bool] = mapped_column(Boolean)
    pause_entered_at: Mapped[Optional[str]] = mapped_column(String(40), nullable=True)
    pause_release_at: Mapped[Optional[str]] = mapped_column(String(40), nullable=True)
    pause_released: Mapped[bool] = mapped_column(Boolean)


class InviteRow(Base):
    __tablename__ = "invites"
    token: Mapped[str] = mapped_column(String(128), primary_key=True)
    study_id: Mapped[str] = mapped_column(String(64), index=True)
    used: Mapped[bool] = mapped_column(Boolean)


class LogEventRow(Base):
    __tablename__ = "log_events"
    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    study_id: Mapped[str] = mapped_column(String(64), index=True)
    participant_uuid: Mapped[str] = mapped_column(String(64), index=True)
    condition_id: Mapped[str] = mapped_column(String(64))
    event_type: Mapped[str] = mapped_column(String(64))
    client_timestamp: Mapped[int] = mapped_column(BigInteger)
    received_at: Mapped[str] = mapped_column(String(40))
    native_event: Mapped[Optional[dict]] = mapped_column(JSON, nullable=True)
    custom: Mapped[Optional[dict]] = mapped_column(JSON, nullable=True)
    quarantined: Mapped[bool] = mapped_column(Boolean, default=False)
    quarantine_reason: Mapped[Optional[str]] = mapped_column(Text, nullable=True)


class BatchRow(Base):
    __tablename__ = "log_batches"
    participant_uuid: Mapped[str] = mapped_column(String(64), primary_key=True)
    client_batch_id: Mapped[str] = mapped_column(String(128), primary_key=True)
    accepted_count: Mapped[int] = mapped_column(Integer)
    event_ids: Mapped[list] = mapped_column(JSON)


class ArchiveRow(Base):
    __tablename__ = "log_archives"
    study_id: Mapped[str] = mapped_column(String(64), primary_key=True)
    rows: Mapped[list] = mapped_column(JSON)


class SqlStore(Store):
    def __init__(self, url: str):
        kwargs: dict = {"future": True}
        if url.startswith("sqlite"):
            kwargs["connect_args"] = {"check_same_thread": False}
            if ":memory:" in url or url in ("sqlite://", "sqlite:///"):
                kwargs["poolclass"] = StaticPool
        self._engine = create_engine(url, **kwargs)
        Base.metadata.create_all(self._engine)
        self._session = sessionmaker(self._engine, expire_on_commit=False)

    # -- admins --
    def put_admin(self, admin: AdminAccount) -> None:
        with self._session.begin() as session:
            session.merge(AdminRow(id=admin.id, email=admin.email, password_hash=admin.password_hash))

    def get_admin_by_email(self, email: str) -> Optional[AdminAccount]:
        with self._session() as session:
            row = session.execute(select(AdminRow).where(AdminRow.email == email)).scalar_one_or_none()
            if row is None:
                return None
            return AdminAccount(id=row.id, email=row.email, password_hash=row.password_hash)

    # -- studies --
    def put_study(self, study: Study) -> None:
        with self._session.begin() as session:
            session.merge(
                StudyRow(
                    id=study.id,
                    title=study.title,
                    description=study.description,
                    consent=study.consent,
                    start_date=study.start_date.isoformat(),
                    end_date=study.end_date.isoformat(),
                    planned_participants=study.planned_participants,
                    access_mode=study.access_mode,
                    state=study.state,
                    revision=study.revision,
                )
            )

    @staticmethod
    def _study_from_row(row: StudyRow) -> Study:
        return Study(
            id=row.id,
            title=row.title,
            description=row.description,
            consent=row.consent,
            start_date=_dt(row.start_date),
            end_date=_dt(row.end_date),
            planned_participants=row.planned_participants,
            access_mode=row.access_mode,
            state=row.state,
            revision=row.revision,
        )

    def get_study(self, study_id: str) -> Optional[Study]:
        with self._session() as session:
            row = session.get(StudyRow, study_id)
            return self._study_from_row(row) if row else None

    def list_studies(self) -> list[Study]:
        with self._session() as session:
            rows = session.execute(select(StudyRow)).scalars().all()
            return [self._study_from_row(r) for r in rows]

    # -- configs --
    def put_config(self, study_id: str, config: ProcedureConfig) -> None:
        with self._session.begin() as session:
            session.merge(ConfigRow(study_id=study_id, doc=config.model_dump(mode="json")))

    def get_config(self, study_id: str) -> Optional[ProcedureConfig]:
        with self._session() as session:
            row = session.get(ConfigRow, study_id)
            return ProcedureConfig.model_validate(row.doc) if row else None

    # -- procedures --
    def put_procedures(self, study_id: str, procedures: list[Procedure]) -> None:
        with self._session.begin() as session:
            for procedure in procedures:
                session.merge(
                    ProcedureRow(
                        id=procedure.id,
                        study_id=study_id,
                        variant_index=procedure.variant_index,
                        steps=[s.model_dump(mode="json") for s in procedure.steps],
                    )
                )

    @staticmethod
    def _procedure_from_row(row: ProcedureRow) -> Procedure:
        return Procedure.model_validate(
            {"id": row.id, "study_id": row.study_id, "variant_index": row.variant_index, "steps": row.steps}
        )

    def get_procedures(self, study_id: str) -> list[Procedure]:
        with self._session() as session:
            rows = (
                session.execute(
                    select(ProcedureRow)
                    .where(ProcedureRow.study_id == study_id)
                    .order_by(ProcedureRow.variant_index)
                )
                .scalars()
                .all()
            )
            return [self._procedure_from_row(r) for r in rows]

    def get_procedure(self, procedure_id: str) -> Optional[Procedure]:
        with self._session() as session:
            row = session.get(ProcedureRow, procedure_id)
            return self._procedure_from_row(row) if row else None

    # -- participants --
    def put_participant(self, participant: Participant) -> None:
        with self._session.begin() as session:
            session.merge(
                ParticipantRow(
                    uuid=participant.uuid,
                    study_id=participant.study_id,
                    procedure_id=participant.procedure_id,
                    join_index=participant.join_index,
                    progress=participant.progress,
                    state=participant.state,
                    logger_key=participant.logger_key,
                    task_done=participant.task_done,
                    pause_entered_at=_iso(participant.pause_entered_at),
                    pause_release_at=_iso(participant.pause_release_at),
                    pause_released=participant.pause_released,
                )
            )

    @staticmethod
    def _participant_from_row(row: ParticipantRow) -> Participant:
        return Participant(
            uuid=row.uuid,
            study_id=row.study_id,
            procedure_id=row.procedure_id,
            join_index=row.join_index,
            progress=row.progress,
            state=row.state,
            logger_key=row.logger_key,
            task_done=row.task_done,
            pause_entered_at=_dt(row.pause_entered_at),
            pause_release_at=_dt(row.pause_release_at),
            pause_released=row.pause_released,
        )

    def get_participant(self, uuid: str) -> Optional[Participant]:
        with self._session() as session:
            row = session.get(ParticipantRow, uuid)
            return self._participant_from_row(row) if row else None

    def list_participants(self, study_id: str) -> list[Participant]:
        with self._session() as session:
            rows = (
                session.execute(
                    select(ParticipantRow)
                    .where(ParticipantRow.study_id == study_id)
                    .order_by(ParticipantRow.join_index)
                )
                .scalars()
                .all()
            )
            return [self._participant_from_row(r) for r in rows]

    def count_participants(self, study_id: str) -> int:
        with self._session() as session:
            return session.execute(
                select(func.count())
                .select_from(ParticipantRow)
                .where(ParticipantRow.study_id == study_id)
            ).scalar_one()

    # -- invites --
    def put_invite(self, invite: Invite) -> None:
        with self._session.begin() as session:
            session.merge(InviteRow(token=invite.token, study_id=invite.study_id, used=invite.used))

    def get_invite(self, token: str) -> Optional[Invite]:
        with self._session() as session:
            row = session.get(InviteRow, token)
            if row is None:
                return None
            return Invite(token=row.token, study_id=row.study_id, used=row.used)

    # -- log events --
    def append_events(self, events: list[LogEvent], batch: Optional[BatchRecord] = None) -> list[LogEvent]:
        with self._session.begin() as session:
            rows: list[LogEventRow] = []
            for event in events:
                row = LogEventRow(
                    study_id=event.study_id,
                    participant_uuid=event.participant_uuid,
                    condition_id=event.condition_id,
                    event_type=event.event_type,
                    client_timestamp=event.client_timestamp,
                    received_at=event.received_at.isoformat(),
                    native_event=event.native_event,
                    custom=event.custom,
                    quarantined=event.quarantined,
                    quarantine_reason=event.quarantine_reason,
                )
                session.add(row)
                rows.append(row)
            session.flush()
            stored = [self._event_from_row(r) for r in rows]
            if batch is not None:
                session.add(
                    BatchRow(
                        participant_uuid=batch.participant_uuid,
                        client_batch_id=batch.client_batch_id,
                        accepted_count=batch.accepted_count,
                        event_ids=[e.id for e in stored],
                    )
                )
            return stored

    @staticmethod
    def _event_from_row(row: LogEventRow) -> LogEvent:
        return LogEvent(
            id=row.id,
            study_id=row.study_id,
            participant_uuid=row.participant_uuid,
            condition_id=row.condition_id,
            event_type=row.event_type,
            client_timestamp=row.client_timestamp,
            received_at=_dt(row.received_at),
            native_event=row.native_event,
            custom=row.custom,
            quarantined=row.quarantined,
            quarantine_reason=row.quarantine_reason,
        )

    def events_for_study(
        self,
        study_id: str,
        *,
        condition_id: Optional[str] = None,
        include_quarantined: bool = False,
    ) -> list[LogEvent]:
        with self._session() as session:
            query = select(LogEventRow).where(LogEventRow.study_id == study_id)
            if condition_id is not None:
                query = query.where(LogEventRow.condition_id == condition_id)
            if not include_quarantined:
                query = query.where(LogEventRow.quarantined.is_(False))
            rows = session.execute(query.order_by(LogEventRow.id)).scalars().all()
            return [self._event_from_row(r) for r in rows]

    def count_events(self, study_id: str) -> int:
        with self._session() as session:
            return session.execute(
                select(func.count()).select_from(LogEventRow).where(LogEventRow.study_id == study_id)
            ).scalar_one()

    def get_batch(self, participant_uuid: str, client_batch_id: str) -> Optional[BatchRecord]:
        with self._session() as session:
            row = session.get(BatchRow, (participant_uuid, client_batch_id))
            if row is None:
                return None
            return BatchRecord(
                participant_uuid=row.participant_uuid,
                client_batch_id=row.client_batch_id,
                accepted_count=row.accepted_count,
                event_ids=row.event_ids,
            )

    # -- archives --
    def put_archive(self, study_id: str, rows: list[dict]) -> None:
        with self._session.begin() as session:
            session.merge(ArchiveRow(study_id=study_id, rows=rows))

    def get_archive(self, study_id: str) -> list[dict]:
        with self._session() as session:
            row = session.get(ArchiveRow, study_id)
            return list(row.rows) if row else []

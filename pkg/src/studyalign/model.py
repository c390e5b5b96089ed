"""Persistent domain entities.

Models validate shape only; semantic rules (date windows, block
nesting, URL absoluteness) live in :mod:`studyalign.validation` so
that researchers can save structurally complete but semantically
broken drafts and get findings back instead of exceptions.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator


def _utc(value: datetime) -> datetime:
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc)


class TextPage(BaseModel):
    type: Literal["text"] = "text"
    id: str = ""
    title: str = ""
    body: str = ""


class Condition(BaseModel):
    """Proxy element pointing at an externally hosted prototype.

    ``config`` is an opaque document passed through to the prototype;
    the platform never interprets it.
    """

    type: Literal["condition"] = "condition"
    id: str = ""
    name: str = ""
    prototype_url: str = ""
    config: dict[str, Any] = Field(default_factory=dict)


class Questionnaire(BaseModel):
    type: Literal["questionnaire"] = "questionnaire"
    id: str = ""
    name: str = ""
    survey_url: str = ""


class Pause(BaseModel):
    type: Literal["pause"] = "pause"
    id: str = ""
    mode: Literal["timed", "manual"] = "manual"
    duration: Optional[int] = None  # seconds; timed mode only
    info: TextPage = Field(default_factory=TextPage)


class Block(BaseModel):
    """Groups steps so they stay contiguous while the group as a whole
    is counterbalanced. Blocks may not contain blocks."""

    type: Literal["block"] = "block"
    id: str = ""
    steps: list["ProcedureConfigStep"] = Field(default_factory=list)


StepElement = Annotated[
    Union[TextPage, Condition, Questionnaire, Pause, Block],
    Field(discriminator="type"),
]

CONCRETE_ELEMENT_TYPES = ("text", "condition", "questionnaire", "pause")
GATED_ELEMENT_TYPES = ("condition", "questionnaire")


class ProcedureConfigStep(BaseModel):
    order: int
    counterbalance: bool = False
    element: StepElement


class ProcedureConfig(BaseModel):
    id: str = ""
    steps: list[ProcedureConfigStep] = Field(default_factory=list)

    def ordered_steps(self) -> list[ProcedureConfigStep]:
        return sorted(self.steps, key=lambda s: s.order)


Block.model_rebuild()


class Study(BaseModel):
    id: str = ""
    title: str
    description: str = ""
    consent: str = ""
    start_date: datetime
    end_date: datetime
    planned_participants: int = 1
    access_mode: Literal["open", "closed"] = "open"
    state: Literal["draft", "active", "finished"] = "draft"
    revision: int = 0

    @field_validator("start_date", "end_date")
    @classmethod
    def _normalize_tz(cls, value: datetime) -> datetime:
        return _utc(value)


class ProcedureStep(BaseModel):
    """One concrete (never a block) step of an assigned procedure."""

    index: int
    element: StepElement
    group: Optional[int] = None  # counterbalance group this step came from


class Procedure(BaseModel):
    id: str = ""
    study_id: str = ""
    variant_index: int = 0
    steps: list[ProcedureStep] = Field(default_factory=list)


class Participant(BaseModel):
    """One person taking part in a study.

    The uuid is random and carries no personal data; network-address
    data is never stored alongside it. ``progress`` is the 0-based
    index of the step the participant currently stands on and is
    monotonically non-decreasing; progress == len(steps) means done.
    """

    uuid: str
    study_id: str
    procedure_id: str
    join_index: int = 0
    progress: int = 0
    state: Literal["registered", "in_progress", "paused", "done"] = "registered"
    logger_key: str = ""
    task_done: bool = False
    pause_entered_at: Optional[datetime] = None
    pause_release_at: Optional[datetime] = None  # timed pauses: when the gate opens
    pause_released: bool = False  # manual pauses: experimenter released

    @field_validator("pause_entered_at", "pause_release_at")
    @classmethod
    def _normalize_tz(cls, value: Optional[datetime]) -> Optional[datetime]:
        return None if value is None else _utc(value)


class LogEvent(BaseModel):
    """One stored interaction record. Append-only once persisted."""

    id: int = 0  # assigned by the store, monotonically increasing
    study_id: str
    participant_uuid: str
    condition_id: str
    event_type: str
    client_timestamp: int  # ms since epoch, participant device clock
    received_at: datetime  # assigned by the server, never the client
    native_event: Optional[dict[str, Any]] = None
    custom: Optional[dict[str, Any]] = None
    quarantined: bool = False
    quarantine_reason: Optional[str] = None

    @field_validator("received_at")
    @classmethod
    def _normalize_tz(cls, value: datetime) -> datetime:
        return _utc(value)


class AdminAccount(BaseModel):
    id: str
    email: str
    password_hash: str  # salted hash; raw passwords are never persisted


class Invite(BaseModel):
    """Single-use access token admitting one participant to a closed study."""

    token: str
    study_id: str
    used: bool = False


class BatchRecord(BaseModel):
    """Remembers an accepted batch so client retries are idempotent."""

    participant_uuid: str
    client_batch_id: str
    accepted_count: int
    event_ids: list[int] = Field(default_factory=list)

"""Participant progression gating.

Each participant walks their assigned procedure one step at a time.
Conditions and questionnaires carry a task gate that must be opened by
a finished signal (from the prototype's logging library or from the
questionnaire backlink) before the participant may advance; pauses
gate on time or experimenter release; text pages never gate.

Connected clients receive push events over a per-participant stream:
``connected`` on subscription, ``proceed`` when the gate opens, and
periodic ``heartbeat`` events so clients can detect dead connections.
A finished signal that arrives while no stream is connected is kept
pending and delivered on the next connect, so a dropped connection
never loses the signal.
"""

from __future__ import annotations

import math
import queue
import threading
from datetime import timedelta
from typing import Callable

from .clock import Clock
from .errors import GateClosed, OutOfSequence, StateConflict, StudyComplete
from .model import GATED_ELEMENT_TYPES, Participant, Pause, Procedure, ProcedureStep
from .store import Store

# Sentinel pushed into a stream queue when a newer connect supersedes it.
CLOSE_STREAM = ("__close__", None)


class StreamHub:
    """At most one live event stream per participant; a new connect
    supersedes the old one."""

    def __init__(self):
        self._streams: dict[str, queue.Queue] = {}
        self._lock = threading.Lock()

    def attach(self, participant_uuid: str) -> queue.Queue:
        with self._lock:
            old = self._streams.get(participant_uuid)
            if old is not None:
                old.put(CLOSE_STREAM)
            fresh: queue.Queue = queue.Queue()
            self._streams[participant_uuid] = fresh
            return fresh

    def detach(self, participant_uuid: str, stream: queue.Queue) -> None:
        with self._lock:
            if self._streams.get(participant_uuid) is stream:
                del self._streams[participant_uuid]

    def push(self, participant_uuid: str, name: str, data: dict) -> bool:
        """Deliver to the live stream, if any. Returns delivery status."""
        with self._lock:
            stream = self._streams.get(participant_uuid)
            if stream is None:
                return False
            stream.put((name, data))
            return True


def step_descriptor(step: ProcedureStep) -> dict:
    """Public view of a procedure step (no server internals)."""
    element = step.element
    doc: dict = {"index": step.index, "type": element.type, "element_id": element.id}
    if element.type == "text":
        doc.update(title=element.title, body=element.body)
    elif element.type == "condition":
        doc.update(name=element.name, prototype_url=element.prototype_url, config=element.config)
    elif element.type == "questionnaire":
        doc.update(name=element.name, survey_url=element.survey_url)
    elif element.type == "pause":
        doc.update(mode=element.mode, duration=element.duration,
                   info={"title": element.info.title, "body": element.info.body})
    return doc


class Navigator:
    """Server-side state machine gating one participant at a time.

    All transitions for one participant are serialized through the
    lock provider; different participants proceed concurrently.
    """

    def __init__(self, store: Store, clock: Clock, lock_for: Callable[[str], threading.Lock]):
        self._store = store
        self._clock = clock
        self._lock_for = lock_for
        self.hub = StreamHub()

    # -- helpers --

    def _procedure(self, participant: Participant) -> Procedure:
        procedure = self._store.get_procedure(participant.procedure_id)
        if procedure is None:
            raise StateConflict("participant has no assigned procedure")
        return procedure

    def _current_step(self, participant: Participant, procedure: Procedure) -> ProcedureStep:
        if participant.progress >= len(procedure.steps):
            raise StudyComplete("study complete")
        return procedure.steps[participant.progress]

    def _event_data(self, participant: Participant) -> dict:
        return {
            "participant_uuid": participant.uuid,
            "step_index": participant.progress,
            "time": self._clock.now().isoformat(),
        }

    def enter_step(self, participant: Participant, procedure: Procedure, *, initial: bool = False) -> None:
        """Record arrival on the current step (pause anchors, state)."""
        participant.task_done = False
        participant.pause_entered_at = None
        participant.pause_release_at = None
        participant.pause_released = False
        if participant.progress >= len(procedure.steps):
            participant.state = "done"
            return
        element = procedure.steps[participant.progress].element
        if element.type == "pause":
            now = self._clock.now()
            participant.pause_entered_at = now
            if isinstance(element, Pause) and element.mode == "timed" and element.duration:
                participant.pause_release_at = now + timedelta(seconds=element.duration)
            participant.state = "paused"
        elif not initial:
            participant.state = "in_progress"

    # -- operations --

    def connect(self, participant: Participant, step_index: int) -> queue.Queue:
        """Open an event stream for the participant's current step.

        The returned queue is pre-seeded with the ``connected`` event
        and, when the task already finished, the pending ``proceed``.
        """
        with self._lock_for(participant.uuid):
            participant = self._store.get_participant(participant.uuid)
            procedure = self._procedure(participant)
            if participant.progress != step_index:
                raise OutOfSequence(
                    "out of sequence: connect targets a step the participant is not on",
                    detail={"progress": participant.progress, "requested": step_index},
                )
            step = self._current_step(participant, procedure)
            if step.element.type not in GATED_ELEMENT_TYPES:
                raise StateConflict("current step has no task gate", code="no_task_gate")
            stream = self.hub.attach(participant.uuid)
            stream.put(("connected", self._event_data(participant)))
            if participant.task_done:
                stream.put(("proceed", self._event_data(participant)))
            return stream

    def signal_task_finished(self, participant: Participant, step_index: int) -> dict:
        """Open the current step's task gate. Idempotent."""
        with self._lock_for(participant.uuid):
            participant = self._store.get_participant(participant.uuid)
            procedure = self._procedure(participant)
            if participant.progress != step_index:
                raise OutOfSequence(
                    "out of sequence: finished signal targets a step the participant is not on",
                    detail={"progress": participant.progress, "requested": step_index},
                )
            step = self._current_step(participant, procedure)
            if step.element.type not in GATED_ELEMENT_TYPES:
                raise StateConflict("current step has no task gate", code="no_task_gate")
            if participant.task_done:
                return {"changed": False, "delivered": False}
            participant.task_done = True
            if participant.state == "registered":
                participant.state = "in_progress"
            self._store.put_participant(participant)
            delivered = self.hub.push(participant.uuid, "proceed", self._event_data(participant))
            return {"changed": True, "delivered": delivered}

    def advance(self, participant: Participant) -> dict:
        """Move one step forward if the current step's gate is open."""
        with self._lock_for(participant.uuid):
            participant = self._store.get_participant(participant.uuid)
            procedure = self._procedure(participant)
            step = self._current_step(participant, procedure)
            element = step.element
            if element.type in GATED_ELEMENT_TYPES and not participant.task_done:
                raise GateClosed("not allowed to proceed: task not finished")
            if element.type == "pause":
                gate = self._pause_gate(participant, element)
                if not gate["open"]:
                    raise GateClosed(
                        "not allowed to proceed: pause still active",
                        detail={"remaining_seconds": gate.get("remaining_seconds")},
                    )
            participant.progress += 1
            self.enter_step(participant, procedure)
            if participant.state != "paused" and participant.progress < len(procedure.steps):
                participant.state = "in_progress"
            self._store.put_participant(participant)
            if participant.progress >= len(procedure.steps):
                return {"complete": True, "progress": participant.progress, "step": None}
            return {
                "complete": False,
                "progress": participant.progress,
                "step": step_descriptor(procedure.steps[participant.progress]),
            }

    def _pause_gate(self, participant: Participant, element: Pause) -> dict:
        now = self._clock.now()
        if element.mode == "timed":
            release_at = participant.pause_release_at
            if release_at is None:
                # defensive: anchor missing, treat entry as now
                return {"open": False, "remaining_seconds": element.duration or 0}
            if now >= release_at:
                return {"open": True, "remaining_seconds": 0}
            return {"open": False, "remaining_seconds": math.ceil((release_at - now).total_seconds())}
        return {"open": bool(participant.pause_released), "remaining_seconds": None}

    def evaluate_pause(self, participant: Participant) -> dict:
        with self._lock_for(participant.uuid):
            participant = self._store.get_participant(participant.uuid)
            procedure = self._procedure(participant)
            step = self._current_step(participant, procedure)
            if step.element.type != "pause":
                raise StateConflict("current step is not a pause", code="no_pause_active")
            return self._pause_gate(participant, step.element)

    def release_pause(self, participant: Participant) -> dict:
        """Experimenter releases a manual pause for this participant only."""
        with self._lock_for(participant.uuid):
            participant = self._store.get_participant(participant.uuid)
            procedure = self._procedure(participant)
            try:
                step = self._current_step(participant, procedure)
            except StudyComplete:
                raise StateConflict("no manual pause active", code="no_manual_pause") from None
            if step.element.type != "pause" or step.element.mode != "manual":
                raise StateConflict("no manual pause active", code="no_manual_pause")
            if participant.pause_released:
                return {"released": False}
            participant.pause_released = True
            self._store.put_participant(participant)
            return {"released": True}


def format_sse(name: str, data_json: str) -> str:
    return f"event: {name}\ndata: {data_json}\n\n"

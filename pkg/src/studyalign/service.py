"""The platform service: every operation the API and CLI expose.

Owns the store, the clock, the id source, and all cross-entity
concurrency control: per-participant transitions are serialized
through one lock per participant, and registration uses an atomic
check-and-increment against the study's capacity.
"""

from __future__ import annotations

import hmac
import threading
from typing import Optional
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from . import auth, exchange
from .clock import Clock, SystemClock
from .counterbalance import generate_variants
from .errors import (
    AuthFailure,
    MissingEntity,
    OutOfSequence,
    ProcedureFrozen,
    StateConflict,
    StudyFull,
    ValidationFailure,
)
from .ids import IdSource
from .logs import DEFAULT_MAX_BATCH_SIZE, DEFAULT_MAX_EVENT_BYTES, LogService
from .model import AdminAccount, Invite, Participant, Procedure, ProcedureStep, Study
from .navigator import Navigator, step_descriptor
from .store import Store
from .validation import Finding, validate_study

DEFAULT_TOKEN_TTL_SECONDS = 24 * 3600
DEFAULT_HEARTBEAT_SECONDS = 15.0


class Platform:
    def __init__(
        self,
        store: Store,
        *,
        clock: Optional[Clock] = None,
        ids: Optional[IdSource] = None,
        secret: Optional[str] = None,
        token_ttl_seconds: int = DEFAULT_TOKEN_TTL_SECONDS,
        heartbeat_seconds: float = DEFAULT_HEARTBEAT_SECONDS,
        max_batch_size: int = DEFAULT_MAX_BATCH_SIZE,
        max_event_bytes: int = DEFAULT_MAX_EVENT_BYTES,
    ):
        self.store = store
        self.clock = clock or SystemClock()
        self.ids = ids or IdSource()
        self.secret = secret or self.ids.secret(32)
        self.token_ttl_seconds = token_ttl_seconds
        self.heartbeat_seconds = heartbeat_seconds
        self._participant_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._registration_lock = threading.Lock()
        self.navigator = Navigator(store, self.clock, self._lock_for)
        self.logs = LogService(store, self.clock, max_batch_size=max_batch_size, max_event_bytes=max_event_bytes)

    def _lock_for(self, participant_uuid: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._participant_locks.get(participant_uuid)
            if lock is None:
                lock = self._participant_locks[participant_uuid] = threading.Lock()
            return lock

    # -- admin accounts ----------------------------------------------------

    def create_admin(self, email: str, password: str) -> AdminAccount:
        if not email or not password:
            raise ValidationFailure("email and password are required")
        if self.store.get_admin_by_email(email) is not None:
            raise StateConflict(f"admin {email} already exists", code="admin_exists")
        admin = AdminAccount(
            id=self.ids.entity_id("adm"), email=email, password_hash=auth.hash_password(password)
        )
        self.store.put_admin(admin)
        return admin

    def authenticate_admin(self, email: str, password: str) -> dict:
        admin = self.store.get_admin_by_email(email)
        # Unknown email and wrong password must be indistinguishable.
        if admin is None or not auth.verify_password(password, admin.password_hash):
            raise AuthFailure("invalid credentials")
        token = auth.issue_token(
            admin.id, admin.email, secret=self.secret, clock=self.clock, ttl_seconds=self.token_ttl_seconds
        )
        expires = int(self.clock.now().timestamp()) + self.token_ttl_seconds
        return {"token": token, "token_type": "bearer", "expires_at": expires}

    def verify_admin_token(self, token: str) -> dict:
        return auth.verify_token(token, secret=self.secret, clock=self.clock)

    # -- studies -----------------------------------------------------------

    def create_study(self, fields: dict, config_doc: dict) -> dict:
        study = exchange.study_from_document({"study": fields}, self.ids)
        config = exchange.mint_config(config_doc, self.ids)
        self.store.put_study(study)
        self.store.put_config(study.id, config)
        return self.study_detail(study.id)

    def get_study(self, study_id: str) -> Study:
        study = self.store.get_study(study_id)
        if study is None:
            raise MissingEntity(f"study {study_id} not found")
        return study

    def study_detail(self, study_id: str) -> dict:
        study = self.get_study(study_id)
        config = self.store.get_config(study_id)
        findings = validate_study(study, config) if config else [
            Finding(code="empty_procedure", path="procedure_config", message="procedure has no steps")
        ]
        return {
            "study": study.model_dump(mode="json"),
            "procedure_config": config.model_dump(mode="json") if config else None,
            "participant_count": self.store.count_participants(study_id),
            "event_count": self.store.count_events(study_id),
            "archived_log_count": len(self.store.get_archive(study_id)),
            "findings": [f.model_dump() for f in findings],
        }

    def list_studies(self) -> list[dict]:
        rows = []
        for study in self.store.list_studies():
            rows.append(
                {
                    "study": study.model_dump(mode="json"),
                    "participant_count": self.store.count_participants(study.id),
                }
            )
        return rows

    def validate(self, study_id: str) -> list[Finding]:
        study = self.get_study(study_id)
        config = self.store.get_config(study_id)
        if config is None:
            raise StateConflict("study has no procedure config")
        return validate_study(study, config)

    _TEXT_FIELDS = ("title", "description", "consent")
    _DATE_FIELDS = ("start_date", "end_date")

    def update_study(self, study_id: str, patch: dict) -> dict:
        study = self.get_study(study_id)
        if study.state == "finished":
            raise StateConflict("study is finished and can no longer be edited", code="study_finished")
        participant_count = self.store.count_participants(study_id)

        unknown = set(patch) - {
            *self._TEXT_FIELDS,
            *self._DATE_FIELDS,
            "planned_participants",
            "access_mode",
            "state",
            "procedure_config",
        }
        if unknown:
            raise ValidationFailure(f"unknown fields: {sorted(unknown)}")

        if "procedure_config" in patch:
            if participant_count > 0:
                raise ProcedureFrozen(
                    "procedure frozen: structure cannot change once a participant registered"
                )
            config = exchange.mint_config(patch["procedure_config"], self.ids)
            self.store.put_config(study_id, config)
            self.store.put_procedures(study_id, [])  # regenerate on next registration

        if "access_mode" in patch and patch["access_mode"] != study.access_mode:
            if study.state != "draft" or participant_count > 0:
                raise StateConflict("access_mode can only change while the study is a draft")
            study.access_mode = patch["access_mode"]

        if "planned_participants" in patch:
            value = patch["planned_participants"]
            if not isinstance(value, int) or value < 1:
                raise ValidationFailure("planned_participants must be a positive integer")
            if study.state == "active" and value < study.planned_participants:
                raise StateConflict(
                    "planned_participants can only increase while the study is active",
                    code="capacity_decrease",
                )
            if value < participant_count:
                raise StateConflict(
                    "planned_participants cannot drop below the registered participant count",
                    code="capacity_below_registered",
                )
            study.planned_participants = value

        for field in self._TEXT_FIELDS:
            if field in patch:
                setattr(study, field, patch[field])
        for field in self._DATE_FIELDS:
            if field in patch:
                try:
                    patched = Study.model_validate({**study.model_dump(), field: patch[field]})
                except Exception as exc:
                    raise ValidationFailure(f"invalid {field}: {exc}") from None
                setattr(study, field, getattr(patched, field))

        if "state" in patch and patch["state"] != study.state:
            study = self._transition_state(study, patch["state"])

        study.revision += 1
        self.store.put_study(study)
        return self.study_detail(study_id)

    def _transition_state(self, study: Study, target: str) -> Study:
        allowed = {("draft", "active"), ("active", "finished")}
        if (study.state, target) not in allowed:
            raise StateConflict(f"cannot transition study from {study.state} to {target}")
        if target == "active":
            config = self.store.get_config(study.id)
            if config is None:
                raise StateConflict("study has no procedure config")
            findings = validate_study(study, config)
            if findings:
                raise ValidationFailure(
                    "study has validation findings and cannot be activated",
                    detail={"findings": [f.model_dump() for f in findings]},
                )
        study.state = target
        return study

    # -- invites -----------------------------------------------------------

    def issue_invite(self, study_id: str) -> Invite:
        self.get_study(study_id)
        invite = Invite(token=self.ids.secret(16), study_id=study_id)
        self.store.put_invite(invite)
        return invite

    # -- registration and procedures ----------------------------------------

    def _ensure_procedures(self, study_id: str) -> list[Procedure]:
        procedures = self.store.get_procedures(study_id)
        if procedures:
            return procedures
        config = self.store.get_config(study_id)
        if config is None:
            raise StateConflict("study has no procedure config")
        variant_set = generate_variants(config)
        procedures = []
        for index, variant in enumerate(variant_set.variants):
            steps = [
                ProcedureStep(index=i, element=flat.element, group=flat.group)
                for i, flat in enumerate(variant)
            ]
            procedures.append(
                Procedure(
                    id=self.ids.entity_id("proc"),
                    study_id=study_id,
                    variant_index=index,
                    steps=steps,
                )
            )
        self.store.put_procedures(study_id, procedures)
        return procedures

    def register_participant(self, study_id: str, invite_token: Optional[str] = None) -> dict:
        study = self.get_study(study_id)
        if study.state != "active":
            raise StateConflict(f"study is not active (state: {study.state})", code="study_inactive")
        now = self.clock.now()
        if not (study.start_date <= now <= study.end_date):
            raise StateConflict("study is outside its date window", code="outside_date_window")

        with self._registration_lock:
            invite: Optional[Invite] = None
            if study.access_mode == "closed":
                if not invite_token:
                    raise AuthFailure("closed study requires an invite token", code="invite_required")
                invite = self.store.get_invite(invite_token)
                if invite is None or invite.study_id != study_id or invite.used:
                    raise AuthFailure("invite token is invalid or already used", code="invite_invalid")

            count = self.store.count_participants(study_id)
            if count >= study.planned_participants:
                raise StudyFull(
                    "study full: planned participant count reached",
                    detail={"planned_participants": study.planned_participants},
                )
            procedures = self._ensure_procedures(study_id)
            procedure = procedures[count % len(procedures)]
            participant = Participant(
                uuid=self.ids.participant_uuid(),
                study_id=study_id,
                procedure_id=procedure.id,
                join_index=count,
                logger_key=self.ids.secret(24),
                progress=0,
                state="registered",
            )
            self.navigator.enter_step(participant, procedure, initial=True)
            self.store.put_participant(participant)
            if invite is not None:
                invite.used = True
                self.store.put_invite(invite)

        return {
            "participant_uuid": participant.uuid,
            "logger_key": participant.logger_key,
            "study_id": study_id,
            "variant_index": procedure.variant_index,
            "procedure": self._procedure_view(participant, procedure),
        }

    # -- participant access --------------------------------------------------

    def auth_participant(self, participant_uuid: str, logger_key: str) -> Participant:
        participant = self.store.get_participant(participant_uuid)
        if participant is None or not logger_key or not hmac.compare_digest(participant.logger_key, logger_key):
            raise AuthFailure("unknown participant or bad logger key")
        return participant

    def get_participant(self, participant_uuid: str) -> Participant:
        participant = self.store.get_participant(participant_uuid)
        if participant is None:
            raise MissingEntity(f"participant {participant_uuid} not found")
        return participant

    def _procedure_view(self, participant: Participant, procedure: Procedure) -> dict:
        steps = []
        for step in procedure.steps:
            doc = step_descriptor(step)
            if step.element.type == "questionnaire":
                doc["resolved_url"] = self.build_questionnaire_url(participant, step.index)
            steps.append(doc)
        return {"id": procedure.id, "variant_index": procedure.variant_index, "steps": steps}

    def participant_view(self, participant: Participant) -> dict:
        study = self.get_study(participant.study_id)
        procedure = self.store.get_procedure(participant.procedure_id)
        view = {
            "participant_uuid": participant.uuid,
            "study": {
                "id": study.id,
                "title": study.title,
                "description": study.description,
                "consent": study.consent,
            },
            "progress": participant.progress,
            "state": participant.state,
            "task_done": participant.task_done,
            "step_count": len(procedure.steps),
            "procedure": self._procedure_view(participant, procedure),
            "current_step": None,
            "pause": None,
        }
        if participant.progress < len(procedure.steps):
            current = procedure.steps[participant.progress]
            doc = step_descriptor(current)
            if current.element.type == "questionnaire":
                doc["resolved_url"] = self.build_questionnaire_url(participant, current.index)
            view["current_step"] = doc
            if current.element.type == "pause":
                view["pause"] = self.navigator.evaluate_pause(participant)
        return view

    # -- questionnaire handoff ------------------------------------------------

    def build_questionnaire_url(self, participant: Participant, step_index: int) -> str:
        procedure = self.store.get_procedure(participant.procedure_id)
        if procedure is None or not (0 <= step_index < len(procedure.steps)):
            raise StateConflict("no such step", code="no_questionnaire")
        element = procedure.steps[step_index].element
        if element.type != "questionnaire":
            raise StateConflict("step is not a questionnaire", code="no_questionnaire")
        signature = auth.sign_handoff(self.secret, participant.uuid, participant.study_id, step_index)
        scheme, netloc, path, query, fragment = urlsplit(element.survey_url)
        params = parse_qsl(query, keep_blank_values=True)
        params += [
            ("participant", participant.uuid),
            ("study", participant.study_id),
            ("step", str(step_index)),
            ("sig", signature),
        ]
        return urlunsplit((scheme, netloc, path, urlencode(params), fragment))

    def handle_questionnaire_callback(self, params: dict) -> dict:
        required = ("participant", "study", "step", "sig")
        missing = [k for k in required if not params.get(k)]
        if missing:
            raise ValidationFailure(f"missing callback parameters: {missing}")
        try:
            step_index = int(params["step"])
        except (TypeError, ValueError):
            raise ValidationFailure("step must be an integer") from None
        if not auth.verify_handoff(self.secret, params["participant"], params["study"], step_index, params["sig"]):
            raise AuthFailure("invalid handoff signature", code="bad_signature")
        participant = self.get_participant(params["participant"])
        if participant.study_id != params["study"]:
            raise AuthFailure("invalid handoff signature", code="bad_signature")
        if participant.progress != step_index:
            raise OutOfSequence(
                "out of sequence: participant is no longer on that questionnaire",
                detail={"progress": participant.progress, "requested": step_index},
            )
        procedure = self.store.get_procedure(participant.procedure_id)
        if procedure.steps[step_index].element.type != "questionnaire":
            raise StateConflict("callback target step is not a questionnaire", code="no_questionnaire")
        result = self.navigator.signal_task_finished(participant, step_index)
        return {"gate_open": True, **result}

    # -- exchange ----------------------------------------------------------

    def export_study(self, study_id: str, *, include_logs: bool = False) -> bytes:
        study = self.get_study(study_id)
        config = self.store.get_config(study_id)
        if config is None:
            raise StateConflict("study has no procedure config")
        logs = self.logs.export_rows(study_id) if include_logs else None
        return exchange.export_bytes(exchange.study_document(study, config, logs))

    def import_study(self, raw: bytes | str | dict) -> dict:
        doc = exchange.parse_document(raw)
        study = exchange.study_from_document(doc, self.ids)
        config = exchange.mint_config(doc.get("procedure_config") or {}, self.ids)
        self.store.put_study(study)
        self.store.put_config(study.id, config)
        logs = doc.get("logs")
        if logs:
            self.store.put_archive(study.id, logs)
        return self.study_detail(study.id)

    def duplicate_study(self, study_id: str) -> dict:
        doc = exchange.parse_document(self.export_study(study_id, include_logs=False))
        doc["study"]["title"] = f"{doc['study']['title']} (copy)"
        doc["checksum"] = exchange.checksum_of(doc)
        return self.import_study(doc)

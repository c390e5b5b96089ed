"""REST and SSE surface over the platform service.

Error contract: every domain error is a JSON document
``{code, message, detail}`` with status 400 (validation), 401 (auth),
403 (credential of the wrong class), 404 (missing), or 409
(sequence/capacity conflicts). Admin endpoints take a bearer token;
participant endpoints take the ``Logger-Api-Key`` header (the SSE
endpoint also accepts ``?key=`` because the browser EventSource API
cannot set request headers).
"""

from __future__ import annotations

import functools
import json
import queue

import anyio
from fastapi import Body, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from starlette.responses import HTMLResponse, JSONResponse, Response, StreamingResponse

from . import __version__
from .errors import AuthFailure, DomainError, PartitionViolation
from .model import Participant
from .navigator import CLOSE_STREAM, format_sse
from .service import Platform


def _admin(request: Request) -> dict:
    platform: Platform = request.app.state.platform
    authorization = request.headers.get("Authorization", "")
    if authorization.startswith("Bearer "):
        return platform.verify_admin_token(authorization[len("Bearer "):])
    if request.headers.get("Logger-Api-Key"):
        raise PartitionViolation("participant credentials cannot access administrative operations")
    raise AuthFailure("missing bearer token")


def _participant(request: Request, participant_uuid: str, *, allow_query_key: bool = False) -> Participant:
    platform: Platform = request.app.state.platform
    key = request.headers.get("Logger-Api-Key")
    if not key and allow_query_key:
        key = request.query_params.get("key")
    if key:
        return platform.auth_participant(participant_uuid, key)
    authorization = request.headers.get("Authorization", "")
    if authorization.startswith("Bearer "):
        platform.verify_admin_token(authorization[len("Bearer "):])
        raise PartitionViolation("administrator tokens cannot act for participants")
    raise AuthFailure("missing logger key")


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="StudyAlign", version=__version__)
    app.state.platform = platform
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(DomainError)
    async def domain_error_handler(_request: Request, exc: DomainError):
        return JSONResponse(status_code=exc.status, content=exc.payload())

    @app.exception_handler(RequestValidationError)
    async def request_validation_handler(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "validation", "message": "invalid request body", "detail": {"errors": exc.errors()}},
        )

    # -- health / auth ------------------------------------------------------

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/api/v1/auth/login")
    def login(body: dict = Body(...)):
        return platform.authenticate_admin(body.get("email", ""), body.get("password", ""))

    # -- studies (admin) ------------------------------------------------------

    @app.get("/api/v1/studies")
    def list_studies(request: Request):
        _admin(request)
        return {"studies": platform.list_studies()}

    @app.post("/api/v1/studies/import")
    async def import_study(request: Request):
        _admin(request)
        raw = await request.body()
        return platform.import_study(raw)

    @app.post("/api/v1/studies", status_code=201)
    def create_study(request: Request, body: dict = Body(...)):
        _admin(request)
        fields = {k: v for k, v in body.items() if k != "procedure_config"}
        return platform.create_study(fields, body.get("procedure_config") or {})

    @app.get("/api/v1/studies/{study_id}")
    def get_study(request: Request, study_id: str):
        _admin(request)
        return platform.study_detail(study_id)

    @app.patch("/api/v1/studies/{study_id}")
    def update_study(request: Request, study_id: str, body: dict = Body(...)):
        _admin(request)
        return platform.update_study(study_id, body)

    @app.post("/api/v1/studies/{study_id}/duplicate", status_code=201)
    def duplicate_study(request: Request, study_id: str):
        _admin(request)
        return platform.duplicate_study(study_id)

    @app.get("/api/v1/studies/{study_id}/export")
    def export_study(request: Request, study_id: str, include_logs: bool = Query(False)):
        _admin(request)
        data = platform.export_study(study_id, include_logs=include_logs)
        return Response(content=data, media_type="application/json; charset=utf-8")

    @app.post("/api/v1/studies/{study_id}/invites", status_code=201)
    def create_invite(request: Request, study_id: str):
        _admin(request)
        invite = platform.issue_invite(study_id)
        return invite.model_dump()

    @app.get("/api/v1/studies/{study_id}/logs")
    def preview_logs(
        request: Request,
        study_id: str,
        page: int = Query(1, ge=1),
        page_size: int = Query(50, ge=1, le=500),
    ):
        _admin(request)
        platform.get_study(study_id)
        return platform.logs.preview(study_id, page, page_size)

    @app.get("/api/v1/studies/{study_id}/logs.csv")
    def export_logs_csv(request: Request, study_id: str, condition: str | None = Query(None)):
        _admin(request)
        platform.get_study(study_id)
        return StreamingResponse(
            platform.logs.export_csv(study_id, condition_id=condition),
            media_type="text/csv; charset=utf-8",
            headers={"Content-Disposition": f'attachment; filename="{study_id}-logs.csv"'},
        )

    # -- participants ---------------------------------------------------------

    @app.post("/api/v1/studies/{study_id}/participants", status_code=201)
    def register_participant(study_id: str, body: dict | None = Body(None)):
        invite_token = (body or {}).get("invite_token")
        return platform.register_participant(study_id, invite_token=invite_token)

    @app.get("/api/v1/participants/{participant_uuid}/procedure")
    def participant_procedure(request: Request, participant_uuid: str):
        participant = _participant(request, participant_uuid)
        return platform.participant_view(participant)

    @app.get("/api/v1/participants/{participant_uuid}/navigator")
    async def navigator_stream(request: Request, participant_uuid: str, step: int = Query(...)):
        participant = _participant(request, participant_uuid, allow_query_key=True)
        stream = await anyio.to_thread.run_sync(platform.navigator.connect, participant, step)

        async def events():
            try:
                while True:
                    try:
                        item = await anyio.to_thread.run_sync(
                            functools.partial(stream.get, timeout=platform.heartbeat_seconds),
                            abandon_on_cancel=True,
                        )
                    except queue.Empty:
                        heartbeat = {
                            "participant_uuid": participant_uuid,
                            "step_index": step,
                            "time": platform.clock.now().isoformat(),
                        }
                        yield format_sse("heartbeat", json.dumps(heartbeat))
                        continue
                    if item == CLOSE_STREAM:
                        return
                    name, data = item
                    yield format_sse(name, json.dumps(data))
            finally:
                platform.navigator.hub.detach(participant_uuid, stream)

        return StreamingResponse(
            events(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    @app.post("/api/v1/participants/{participant_uuid}/steps/{step_index}/finished")
    def step_finished(request: Request, participant_uuid: str, step_index: int):
        participant = _participant(request, participant_uuid)
        return platform.navigator.signal_task_finished(participant, step_index)

    @app.post("/api/v1/participants/{participant_uuid}/advance")
    def advance(request: Request, participant_uuid: str):
        participant = _participant(request, participant_uuid)
        return platform.navigator.advance(participant)

    @app.post("/api/v1/participants/{participant_uuid}/pause/release")
    def release_pause(request: Request, participant_uuid: str):
        _admin(request)  # experimenters release pauses from the control panel
        participant = platform.get_participant(participant_uuid)
        return platform.navigator.release_pause(participant)

    # -- logging ---------------------------------------------------------------

    @app.post("/api/v1/logs", status_code=201)
    def ingest_log(request: Request, body: dict = Body(...)):
        participant = _participant(request, str(body.get("participant_uuid", "")))
        procedure = platform.store.get_procedure(participant.procedure_id)
        event = platform.logs.ingest_single(participant, procedure, body)
        return {"id": event.id, "quarantined": event.quarantined, "quarantine_reason": event.quarantine_reason}

    @app.post("/api/v1/logs/batch", status_code=201)
    def ingest_log_batch(request: Request, body: dict = Body(...)):
        participant = _participant(request, str(body.get("participant_uuid", "")))
        procedure = platform.store.get_procedure(participant.procedure_id)
        return platform.logs.ingest_batch(participant, procedure, body)

    # -- questionnaire backlink --------------------------------------------------

    @app.get("/api/v1/questionnaire/callback")
    def questionnaire_callback(request: Request):
        params = dict(request.query_params)
        result = platform.handle_questionnaire_callback(params)
        if "text/html" in request.headers.get("Accept", ""):
            return HTMLResponse(
                "<html><body><h1>Questionnaire received</h1>"
                "<p>You can return to the study tab and continue.</p></body></html>"
            )
        return result

    return app

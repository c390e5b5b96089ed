"""Command-line access to administrative operations.

Works in two modes: against a running server (``--server`` plus
``--token``) or directly on a local store (``--store``). Exports are
byte-identical between the two modes and the HTTP API.

Configuration precedence: flags > environment variables
(STUDYALIGN_SERVER, STUDYALIGN_TOKEN, STUDYALIGN_STORE) > config file.
Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Any, Optional

import click
import httpx

from .errors import DomainError
from .service import Platform
from .store import open_store

DEFAULT_CONFIG_PATH = Path.home() / ".config" / "studyalign" / "config.json"


class CliError(click.ClickException):
    exit_code = 1

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code

    def show(self, file=None) -> None:
        click.echo(f"error[{self.code}]: {self.format_message()}", err=True)


class RemoteBackend:
    """Talks to a running api-server; errors keep their domain code."""

    def __init__(self, server: str, token: Optional[str]):
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = httpx.Client(base_url=server.rstrip("/"), headers=headers, timeout=60)

    def _check(self, response: httpx.Response) -> httpx.Response:
        if response.status_code < 400:
            return response
        try:
            payload = response.json()
            raise CliError(payload.get("code", "error"), payload.get("message", response.text))
        except (ValueError, KeyError):
            raise CliError("http_error", f"{response.status_code}: {response.text}") from None

    def list_studies(self) -> list[dict]:
        return self._check(self._client.get("/api/v1/studies")).json()["studies"]

    def export_study(self, study_id: str, include_logs: bool) -> bytes:
        response = self._client.get(
            f"/api/v1/studies/{study_id}/export", params={"include_logs": include_logs}
        )
        return self._check(response).content

    def import_study(self, raw: bytes) -> dict:
        return self._check(self._client.post("/api/v1/studies/import", content=raw)).json()

    def duplicate_study(self, study_id: str) -> dict:
        return self._check(self._client.post(f"/api/v1/studies/{study_id}/duplicate")).json()

    def export_logs(self, study_id: str, condition: Optional[str]) -> bytes:
        params = {"condition": condition} if condition else {}
        response = self._client.get(f"/api/v1/studies/{study_id}/logs.csv", params=params)
        return self._check(response).content

    def create_invite(self, study_id: str) -> dict:
        return self._check(self._client.post(f"/api/v1/studies/{study_id}/invites")).json()

    def create_admin(self, email: str, password: str) -> dict:
        raise CliError("local_only", "admin create works on a local store (use --store)")


class LocalBackend:
    """Operates on a store file/URL directly; no server required."""

    def __init__(self, target: str):
        self._platform = Platform(open_store(target))

    def _call(self, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DomainError as exc:
            raise CliError(exc.code, exc.message) from None

    def list_studies(self) -> list[dict]:
        return self._call(self._platform.list_studies)

    def export_study(self, study_id: str, include_logs: bool) -> bytes:
        return self._call(self._platform.export_study, study_id, include_logs=include_logs)

    def import_study(self, raw: bytes) -> dict:
        return self._call(self._platform.import_study, raw)

    def duplicate_study(self, study_id: str) -> dict:
        return self._call(self._platform.duplicate_study, study_id)

    def _export_logs(self, study_id: str, condition: Optional[str]) -> bytes:
        self._platform.get_study(study_id)
        return self._platform.logs.export_csv_bytes(study_id, condition_id=condition)

    def export_logs(self, study_id: str, condition: Optional[str]) -> bytes:
        return self._call(self._export_logs, study_id, condition)

    def create_invite(self, study_id: str) -> dict:
        return self._call(lambda: self._platform.issue_invite(study_id).model_dump())

    def create_admin(self, email: str, password: str) -> dict:
        admin = self._call(self._platform.create_admin, email, password)
        return {"id": admin.id, "email": admin.email}


class Settings:
    def __init__(self, server, token, store, config_path, output_format):
        config: dict[str, Any] = {}
        path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
        if path.exists():
            try:
                config = json.loads(path.read_text(encoding="utf-8"))
            except ValueError as exc:
                raise CliError("config", f"config file {path} is not valid JSON: {exc}") from None
        self.server = server or os.environ.get("STUDYALIGN_SERVER") or config.get("server")
        self.token = token or os.environ.get("STUDYALIGN_TOKEN") or config.get("token")
        self.store = store or os.environ.get("STUDYALIGN_STORE") or config.get("store")
        self.output_format = output_format

    def backend(self):
        if self.store and not self.server:
            return LocalBackend(self.store)
        if self.server:
            return RemoteBackend(self.server, self.token)
        raise CliError("config", "no server reachable: pass --server URL or --store PATH")


def _emit(settings: Settings, data, table_rows=None, table_header=None) -> None:
    if settings.output_format == "json" or table_rows is None:
        click.echo(json.dumps(data, indent=2, sort_keys=True))
        return
    widths = [len(h) for h in table_header]
    for row in table_rows:
        widths = [max(w, len(str(c))) for w, c in zip(widths, row)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    click.echo(fmt.format(*table_header))
    for row in table_rows:
        click.echo(fmt.format(*[str(c) for c in row]))


def _write_out(out: Optional[str], data: bytes) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


@click.group()
@click.option("--server", help="Base URL of a running server.")
@click.option("--token", help="Admin bearer token.")
@click.option("--store", help="Local store: JSON file path or SQLAlchemy URL.")
@click.option("--config", "config_path", type=click.Path(), help="Config file (JSON).")
@click.option("--format", "output_format", type=click.Choice(["json", "table"]), default="table")
@click.pass_context
def main(ctx, server, token, store, config_path, output_format):
    """Administer studies, logs, invites, and the server."""
    ctx.obj = Settings(server, token, store, config_path, output_format)


@main.group()
def study():
    """Study management."""


@study.command("list")
@click.pass_obj
def study_list(settings: Settings):
    rows = settings.backend().list_studies()
    table = [
        (
            r["study"]["id"],
            r["study"]["title"],
            r["study"]["state"],
            f"{r['participant_count']}/{r['study']['planned_participants']}",
        )
        for r in rows
    ]
    _emit(settings, rows, table, ("id", "title", "state", "participants"))


@study.command("export")
@click.option("--id", "study_id", required=True)
@click.option("--include-logs", is_flag=True, default=False)
@click.option("--out", type=click.Path())
@click.pass_obj
def study_export(settings: Settings, study_id, include_logs, out):
    data = settings.backend().export_study(study_id, include_logs)
    _write_out(out, data)
    if out:
        click.echo(f"exported {study_id} to {out}", err=True)


@study.command("import")
@click.option("--file", "file_path", required=True, type=click.Path(exists=True))
@click.pass_obj
def study_import(settings: Settings, file_path):
    detail = settings.backend().import_study(Path(file_path).read_bytes())
    _emit(settings, detail, [(detail["study"]["id"], detail["study"]["title"])], ("id", "title"))


@study.command("duplicate")
@click.option("--id", "study_id", required=True)
@click.pass_obj
def study_duplicate(settings: Settings, study_id):
    detail = settings.backend().duplicate_study(study_id)
    _emit(settings, detail, [(detail["study"]["id"], detail["study"]["title"])], ("id", "title"))


@main.group()
def logs():
    """Interaction log access."""


@logs.command("export")
@click.option("--study", "study_id", required=True)
@click.option("--condition", default=None)
@click.option("--out", type=click.Path())
@click.pass_obj
def logs_export(settings: Settings, study_id, condition, out):
    data = settings.backend().export_logs(study_id, condition)
    _write_out(out, data)
    if out:
        click.echo(f"exported logs for {study_id} to {out}", err=True)


@main.group()
def participant():
    """Participant administration."""


@participant.command("invite")
@click.option("--study", "study_id", required=True)
@click.option("--count", default=1, type=click.IntRange(min=1))
@click.pass_obj
def participant_invite(settings: Settings, study_id, count):
    backend = settings.backend()
    invites = [backend.create_invite(study_id) for _ in range(count)]
    _emit(settings, invites, [(i["token"], i["study_id"]) for i in invites], ("token", "study"))


@main.group()
def admin():
    """Admin account management (local store only)."""


@admin.command("create")
@click.option("--email", required=True)
@click.option("--password", required=True)
@click.pass_obj
def admin_create(settings: Settings, email, password):
    result = settings.backend().create_admin(email, password)
    _emit(settings, result, [(result["id"], result["email"])], ("id", "email"))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--secret", envvar="STUDYALIGN_SECRET", default=None)
@click.pass_obj
def serve(settings: Settings, host, port, secret):
    """Run the API server against the configured store."""
    import uvicorn

    from .server import create_app

    if not settings.store:
        raise CliError("config", "serve requires --store (file path or database URL)")
    if not secret:
        click.echo("warning: no --secret/STUDYALIGN_SECRET given; tokens expire on restart", err=True)
    platform = Platform(open_store(settings.store), secret=secret)
    uvicorn.run(create_app(platform), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()

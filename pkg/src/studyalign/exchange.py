"""Study import/export for sharing, replication, and duplication.

A study document is canonical UTF-8 JSON: keys sorted, compact
separators, stable list order, no ids of live entities. The checksum
is the SHA-256 of the canonical serialization of everything except the
checksum itself. Two exports of an unchanged study are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Optional

from .errors import CorruptDocument, UnsupportedVersion, ValidationFailure
from .ids import IdSource
from .model import Block, ProcedureConfig, ProcedureConfigStep, StepElement, Study

FORMAT_VERSION = "1.0.0"
SUPPORTED_MAJOR = 1


def canonical_bytes(doc: dict) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def checksum_of(doc: dict) -> str:
    body = {k: v for k, v in doc.items() if k != "checksum"}
    return hashlib.sha256(canonical_bytes(body)).hexdigest()


def _element_doc(element: StepElement) -> dict:
    if isinstance(element, Block):
        return {"type": "block", "steps": [_step_doc(s) for s in sorted(element.steps, key=lambda s: s.order)]}
    doc = element.model_dump(mode="json")
    doc.pop("id", None)
    return doc


def _step_doc(step: ProcedureConfigStep) -> dict:
    return {"order": step.order, "counterbalance": step.counterbalance, "element": _element_doc(step.element)}


def config_document(config: ProcedureConfig) -> dict:
    return {"steps": [_step_doc(s) for s in config.ordered_steps()]}


def study_document(study: Study, config: ProcedureConfig, logs: Optional[list[dict]] = None) -> dict:
    """Document for one study; live ids and runtime state are omitted."""
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "study": {
            "title": study.title,
            "description": study.description,
            "consent": study.consent,
            "start_date": study.start_date.isoformat(),
            "end_date": study.end_date.isoformat(),
            "planned_participants": study.planned_participants,
            "access_mode": study.access_mode,
        },
        "procedure_config": config_document(config),
    }
    if logs is not None:
        doc["logs"] = logs
    doc["checksum"] = checksum_of(doc)
    return doc


def export_bytes(doc: dict) -> bytes:
    return canonical_bytes(doc)


def parse_document(raw: bytes | str | dict) -> dict:
    """Parse and verify an incoming document. Nothing is persisted here."""
    if isinstance(raw, dict):
        doc = raw
    else:
        try:
            doc = json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorruptDocument(f"document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise CorruptDocument("document must be a JSON object")
    version = doc.get("format_version")
    if not isinstance(version, str):
        raise UnsupportedVersion("document lacks a format_version")
    try:
        major = int(version.split(".")[0])
    except ValueError:
        raise UnsupportedVersion(f"malformed format_version {version!r}") from None
    if major != SUPPORTED_MAJOR:
        raise UnsupportedVersion(
            f"unsupported format_version {version} (supported major: {SUPPORTED_MAJOR})",
            detail={"supported": FORMAT_VERSION, "found": version},
        )
    declared = doc.get("checksum")
    if not declared:
        raise CorruptDocument("document lacks a checksum")
    actual = checksum_of(doc)
    if actual != declared:
        raise CorruptDocument(
            "checksum mismatch: document corrupted in transit",
            detail={"declared": declared, "actual": actual},
        )
    return doc


def mint_config(config_doc: dict, ids: IdSource) -> ProcedureConfig:
    """Build a ProcedureConfig from a document, assigning fresh ids."""
    try:
        config = ProcedureConfig.model_validate({"steps": config_doc.get("steps", [])})
    except Exception as exc:
        raise ValidationFailure(f"malformed procedure_config: {exc}", code="invalid_document") from None
    config.id = ids.entity_id("cfg")
    _assign_element_ids(config.steps, ids)
    return config


def _assign_element_ids(steps: list[ProcedureConfigStep], ids: IdSource) -> None:
    for step in steps:
        element = step.element
        element.id = ids.element_id(element.type)
        if isinstance(element, Block):
            _assign_element_ids(element.steps, ids)


def study_from_document(doc: dict, ids: IdSource) -> Study:
    fields = doc.get("study")
    if not isinstance(fields, dict):
        raise ValidationFailure("document lacks a study section", code="invalid_document")
    try:
        study = Study.model_validate({**fields, "id": ids.entity_id("stu"), "state": "draft"})
    except Exception as exc:
        raise ValidationFailure(f"malformed study section: {exc}", code="invalid_document") from None
    return study

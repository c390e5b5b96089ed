"""Domain error hierarchy.

Every error carries a machine-readable code and maps onto one HTTP
status class: 400 validation, 401 auth, 403 partition, 404 missing,
409 sequence/capacity conflicts. The API layer serializes them as
{code, message, detail} documents; the CLI preserves the code on
stderr.
"""

from __future__ import annotations

from typing import Any


class DomainError(Exception):
    status = 400
    code = "invalid"

    def __init__(self, message: str, *, code: str | None = None, detail: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.detail = detail or {}

    def payload(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "detail": self.detail}


class ValidationFailure(DomainError):
    status = 400
    code = "validation"


class AuthFailure(DomainError):
    status = 401
    code = "auth"


class PartitionViolation(DomainError):
    """A valid credential of the wrong class was presented."""

    status = 403
    code = "forbidden"


class MissingEntity(DomainError):
    status = 404
    code = "not_found"


class StateConflict(DomainError):
    status = 409
    code = "conflict"


class OutOfSequence(StateConflict):
    code = "out_of_sequence"


class GateClosed(StateConflict):
    code = "not_allowed_to_proceed"


class StudyFull(StateConflict):
    code = "study_full"


class StudyComplete(StateConflict):
    code = "study_complete"


class ProcedureFrozen(StateConflict):
    code = "procedure_frozen"


class CorruptDocument(ValidationFailure):
    code = "corrupt_document"


class UnsupportedVersion(ValidationFailure):
    code = "unsupported_version"

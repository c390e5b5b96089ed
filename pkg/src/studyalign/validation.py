"""Semantic validation of studies and procedure configs.

Produces findings, not failures: the control panel's final check step
renders these, and activation refuses studies with a non-empty list.
"""

from __future__ import annotations

from urllib.parse import urlsplit

from pydantic import BaseModel

from .model import Block, Condition, Pause, ProcedureConfig, ProcedureConfigStep, Questionnaire, Study


class Finding(BaseModel):
    code: str
    path: str
    message: str


def _is_absolute_url(url: str) -> bool:
    parts = urlsplit(url)
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def _check_orders(steps: list[ProcedureConfigStep], path: str, findings: list[Finding]) -> None:
    orders = sorted(step.order for step in steps)
    if orders != list(range(1, len(steps) + 1)):
        findings.append(
            Finding(
                code="step_order",
                path=path,
                message=f"step order numbers must be a contiguous 1..{len(steps)} sequence, got {orders}",
            )
        )


def _check_element(step: ProcedureConfigStep, path: str, findings: list[Finding], *, inside_block: bool) -> None:
    element = step.element
    if isinstance(element, Condition):
        if not _is_absolute_url(element.prototype_url):
            findings.append(
                Finding(code="invalid_url", path=path, message=f"prototype_url is not an absolute URL: {element.prototype_url!r}")
            )
    elif isinstance(element, Questionnaire):
        if not _is_absolute_url(element.survey_url):
            findings.append(
                Finding(code="invalid_url", path=path, message=f"survey_url is not an absolute URL: {element.survey_url!r}")
            )
    elif isinstance(element, Pause):
        if element.mode == "timed" and (element.duration is None or element.duration <= 0):
            findings.append(
                Finding(code="pause_duration", path=path, message="timed pause requires a duration > 0 seconds")
            )
    elif isinstance(element, Block):
        if inside_block:
            findings.append(Finding(code="nested_block", path=path, message="a block may not contain a block"))
            return
        if not element.steps:
            findings.append(Finding(code="empty_block", path=path, message="a block must contain at least one step"))
        _check_orders(element.steps, path, findings)
        for inner in element.steps:
            _check_element(inner, f"{path}.steps[{inner.order}]", findings, inside_block=True)


def validate_study(study: Study, config: ProcedureConfig) -> list[Finding]:
    """Check every domain invariant; an empty list means the study can go live."""
    findings: list[Finding] = []
    if study.start_date > study.end_date:
        findings.append(
            Finding(code="date_range_inverted", path="study", message="end_date is before start_date")
        )
    if study.planned_participants < 1:
        findings.append(
            Finding(code="planned_participants", path="study", message="planned_participants must be at least 1")
        )
    if not config.steps:
        findings.append(Finding(code="empty_procedure", path="procedure_config", message="procedure has no steps"))
    _check_orders(config.steps, "procedure_config", findings)
    for step in config.ordered_steps():
        _check_element(step, f"procedure_config.steps[{step.order}]", findings, inside_block=False)
    return findings

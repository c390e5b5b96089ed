from __future__ import annotations

from datetime import datetime, timezone

from studyalign.service import Platform

START = datetime(2026, 1, 1, tzinfo=timezone.utc)
END = datetime(2026, 12, 31, tzinfo=timezone.utc)
TODAY = datetime(2026, 6, 1, 12, 0, tzinfo=timezone.utc)

def study_fields(**overrides) -> dict:
    fields = dict(
        title="Example study",
        description="<p>About</p>",
        consent="<p>Consent</p>",
        start_date=START.isoformat(),
        end_date=END.isoformat(),
        planned_participants=50,
        access_mode="open",
    )
    fields.update(overrides)
    return fields


def text_el(title="page", body="<p>hi</p>"):
    return {"type": "text", "title": title, "body": body}


def cond_el(name, url=None):
    return {"type": "condition", "name": name, "prototype_url": url or f"https://proto.example/{name}", "config": {}}


def quest_el(name, url=None):
    return {"type": "questionnaire", "name": name, "survey_url": url or f"https://survey.example/{name}"}


def pause_el(mode="manual", duration=None, title="pause"):
    return {"type": "pause", "mode": mode, "duration": duration, "info": {"type": "text", "title": title}}


def block_el(*elements):
    return {"type": "block", "steps": [{"order": i + 1, "counterbalance": False, "element": e} for i, e in enumerate(elements)]}


def steps(*elements_with_flags) -> dict:
    """elements_with_flags: element dict or (element dict, flagged)."""
    out = []
    for i, item in enumerate(elements_with_flags):
        element, flagged = item if isinstance(item, tuple) else (item, False)
        out.append({"order": i + 1, "counterbalance": flagged, "element": element})
    return {"steps": out}


def fig_within_subject_config() -> dict:
    return steps(
        text_el("info"),
        (block_el(text_el("brief a"), cond_el("a"), quest_el("qa")), True),
        (block_el(text_el("brief b"), cond_el("b"), quest_el("qb")), True),
        quest_el("final"),
        text_el("end"),
    )


def make_active_study(platform: Platform, config: dict | None = None, **overrides) -> str:
    detail = platform.create_study(study_fields(**overrides), config or fig_within_subject_config())
    study_id = detail["study"]["id"]
    platform.update_study(study_id, {"state": "active"})
    return study_id

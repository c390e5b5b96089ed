"""State machine tests: gating, pauses, pending signals, idempotency."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from studyalign.auth import sign_handoff
from studyalign.errors import (
    AuthFailure,
    DomainError,
    GateClosed,
    OutOfSequence,
    StateConflict,
    StudyComplete,
    StudyFull,
)
from studyalign.navigator import CLOSE_STREAM

from helpers import cond_el, make_active_study, pause_el, quest_el, steps, study_fields, text_el


def register(platform, study_id):
    reg = platform.register_participant(study_id)
    return platform.get_participant(reg["participant_uuid"])


def simple_study(platform, *elements):
    return make_active_study(platform, steps(*elements))


def test_text_pages_advance_freely(platform):
    study_id = simple_study(platform, text_el("a"), text_el("b"))
    participant = register(platform, study_id)
    result = platform.navigator.advance(participant)
    assert result == {"complete": False, "progress": 1, "step": result["step"]}
    assert result["step"]["type"] == "text"
    result = platform.navigator.advance(participant)
    assert result["complete"] is True
    assert platform.get_participant(participant.uuid).state == "done"


def test_advance_past_end_is_study_complete(platform):
    study_id = simple_study(platform, text_el("only"))
    participant = register(platform, study_id)
    platform.navigator.advance(participant)
    with pytest.raises(StudyComplete):
        platform.navigator.advance(participant)


def test_condition_blocks_until_finished(platform):
    study_id = simple_study(platform, cond_el("a"), text_el("end"))
    participant = register(platform, study_id)
    with pytest.raises(GateClosed):
        platform.navigator.advance(participant)
    platform.navigator.signal_task_finished(participant, 0)
    assert platform.navigator.advance(participant)["progress"] == 1


def test_finish_is_idempotent(platform):
    study_id = simple_study(platform, cond_el("a"))
    participant = register(platform, study_id)
    first = platform.navigator.signal_task_finished(participant, 0)
    second = platform.navigator.signal_task_finished(participant, 0)
    assert first["changed"] is True
    assert second["changed"] is False


def test_finish_wrong_step_is_out_of_sequence(platform):
    study_id = simple_study(platform, cond_el("a"), cond_el("b"))
    participant = register(platform, study_id)
    with pytest.raises(OutOfSequence):
        platform.navigator.signal_task_finished(participant, 1)


def test_finish_on_text_step_has_no_gate(platform):
    study_id = simple_study(platform, text_el("a"))
    participant = register(platform, study_id)
    with pytest.raises(StateConflict):
        platform.navigator.signal_task_finished(participant, 0)


def test_connect_requires_current_gated_step(platform):
    study_id = simple_study(platform, text_el("a"), cond_el("b"))
    participant = register(platform, study_id)
    with pytest.raises(StateConflict):
        platform.navigator.connect(participant, 0)  # text page: no gate
    with pytest.raises(OutOfSequence):
        platform.navigator.connect(participant, 1)  # not there yet
    platform.navigator.advance(participant)
    stream = platform.navigator.connect(platform.get_participant(participant.uuid), 1)
    name, data = stream.get_nowait()
    assert name == "connected"
    assert data["participant_uuid"] == participant.uuid
    assert data["step_index"] == 1


def test_connected_stream_receives_proceed(platform):
    study_id = simple_study(platform, cond_el("a"))
    participant = register(platform, study_id)
    stream = platform.navigator.connect(participant, 0)
    assert stream.get_nowait()[0] == "connected"
    result = platform.navigator.signal_task_finished(participant, 0)
    assert result["delivered"] is True
    assert stream.get_nowait()[0] == "proceed"


def test_pending_signal_drains_on_reconnect(platform):
    study_id = simple_study(platform, cond_el("a"))
    participant = register(platform, study_id)
    stream = platform.navigator.connect(participant, 0)
    assert stream.get_nowait()[0] == "connected"
    platform.navigator.hub.detach(participant.uuid, stream)  # drop connection
    result = platform.navigator.signal_task_finished(participant, 0)
    assert result["delivered"] is False  # nobody listening
    reconnect = platform.navigator.connect(platform.get_participant(participant.uuid), 0)
    names = [reconnect.get_nowait()[0], reconnect.get_nowait()[0]]
    assert names == ["connected", "proceed"]


def test_new_connect_supersedes_old_stream(platform):
    study_id = simple_study(platform, cond_el("a"))
    participant = register(platform, study_id)
    old = platform.navigator.connect(participant, 0)
    old.get_nowait()
    new = platform.navigator.connect(participant, 0)
    assert old.get_nowait() == CLOSE_STREAM
    platform.navigator.signal_task_finished(participant, 0)
    assert new.get_nowait()[0] == "connected"
    assert new.get_nowait()[0] == "proceed"


# -- pauses ----------------------------------------------------------------


def test_timed_pause_blocks_then_opens(platform, clock):
    study_id = simple_study(platform, text_el("go"), pause_el("timed", 259200), text_el("end"))
    participant = register(platform, study_id)
    platform.navigator.advance(participant)
    participant = platform.get_participant(participant.uuid)
    assert participant.state == "paused"
    assert participant.pause_release_at is not None

    gate = platform.navigator.evaluate_pause(participant)
    assert gate == {"open": False, "remaining_seconds": 259200}

    clock.advance(2 * 86400)
    gate = platform.navigator.evaluate_pause(participant)
    assert gate == {"open": False, "remaining_seconds": 86400}
    with pytest.raises(GateClosed):
        platform.navigator.advance(participant)

    clock.advance(86400)
    assert platform.navigator.evaluate_pause(participant)["open"] is True
    result = platform.navigator.advance(participant)
    assert result["progress"] == 2
    assert platform.get_participant(participant.uuid).state == "in_progress"


def test_manual_pause_opens_only_on_release(platform):
    study_id = simple_study(platform, pause_el("manual"), text_el("end"))
    participant = register(platform, study_id)
    assert platform.get_participant(participant.uuid).state == "paused"
    assert platform.navigator.evaluate_pause(participant)["open"] is False
    with pytest.raises(GateClosed):
        platform.navigator.advance(participant)

    assert platform.navigator.release_pause(participant) == {"released": True}
    assert platform.navigator.evaluate_pause(participant)["open"] is True
    assert platform.navigator.release_pause(participant) == {"released": False}  # no-op
    platform.navigator.advance(participant)


def test_release_requires_manual_pause(platform):
    study_id = simple_study(platform, cond_el("a"))
    participant = register(platform, study_id)
    with pytest.raises(StateConflict):
        platform.navigator.release_pause(participant)


def test_evaluate_pause_on_non_pause_is_error(platform):
    study_id = simple_study(platform, text_el("a"))
    participant = register(platform, study_id)
    with pytest.raises(StateConflict):
        platform.navigator.evaluate_pause(participant)


def test_release_is_per_participant(platform):
    study_id = simple_study(platform, pause_el("manual"), text_el("end"))
    first = register(platform, study_id)
    second = register(platform, study_id)
    platform.navigator.release_pause(first)
    assert platform.navigator.evaluate_pause(first)["open"] is True
    assert platform.navigator.evaluate_pause(second)["open"] is False


# -- registration ----------------------------------------------------------


def test_round_robin_variant_assignment(platform):
    study_id = make_active_study(platform)
    indices = [platform.register_participant(study_id)["variant_index"] for _ in range(4)]
    assert indices == [0, 1, 0, 1]


def test_capacity_enforced(platform):
    study_id = make_active_study(platform, steps(text_el("a")), planned_participants=2)
    platform.register_participant(study_id)
    platform.register_participant(study_id)
    with pytest.raises(StudyFull):
        platform.register_participant(study_id)


def test_registration_requires_active_study_within_window(platform, clock):
    detail = platform.create_study(study_fields(), steps(text_el("a")))
    study_id = detail["study"]["id"]
    with pytest.raises(StateConflict):
        platform.register_participant(study_id)  # still draft
    platform.update_study(study_id, {"state": "active"})
    clock.advance(400 * 86400)  # past end date
    with pytest.raises(StateConflict):
        platform.register_participant(study_id)


def test_closed_study_requires_unused_invite(platform):
    study_id = make_active_study(platform, steps(text_el("a")), access_mode="closed")
    with pytest.raises(AuthFailure):
        platform.register_participant(study_id)
    invite = platform.issue_invite(study_id)
    platform.register_participant(study_id, invite_token=invite.token)
    with pytest.raises(AuthFailure):
        platform.register_participant(study_id, invite_token=invite.token)  # single use


def test_logger_key_auth(platform):
    study_id = simple_study(platform, text_el("a"))
    reg = platform.register_participant(study_id)
    participant = platform.auth_participant(reg["participant_uuid"], reg["logger_key"])
    assert participant.uuid == reg["participant_uuid"]
    with pytest.raises(AuthFailure):
        platform.auth_participant(reg["participant_uuid"], "wrong")
    with pytest.raises(AuthFailure):
        platform.auth_participant("nobody", reg["logger_key"])


# -- questionnaire handoff ---------------------------------------------------


def test_questionnaire_url_and_callback_roundtrip(platform):
    study_id = simple_study(platform, quest_el("q", "https://s.example/q1"), text_el("end"))
    participant = register(platform, study_id)
    url = platform.build_questionnaire_url(participant, 0)
    assert url.startswith("https://s.example/q1?participant=")
    from urllib.parse import parse_qs, urlsplit

    params = {k: v[0] for k, v in parse_qs(urlsplit(url).query).items()}
    assert params["study"] == study_id and params["step"] == "0"
    result = platform.handle_questionnaire_callback(params)
    assert result["gate_open"] is True
    assert platform.navigator.advance(platform.get_participant(participant.uuid))["progress"] == 1


def test_callback_preserves_existing_query(platform):
    study_id = simple_study(platform, quest_el("q", "https://s.example/q1?lang=de"))
    participant = register(platform, study_id)
    url = platform.build_questionnaire_url(participant, 0)
    assert "lang=de" in url and url.count("?") == 1


def test_forged_callback_rejected(platform):
    study_id = simple_study(platform, quest_el("q"), text_el("end"))
    participant = register(platform, study_id)
    params = {"participant": participant.uuid, "study": study_id, "step": "0", "sig": "0" * 64}
    with pytest.raises(AuthFailure):
        platform.handle_questionnaire_callback(params)
    with pytest.raises(GateClosed):
        platform.navigator.advance(participant)  # gate stayed closed


def test_replayed_callback_after_advance_is_stale(platform):
    study_id = simple_study(platform, quest_el("q"), text_el("end"))
    participant = register(platform, study_id)
    from urllib.parse import parse_qs, urlsplit

    url = platform.build_questionnaire_url(participant, 0)
    params = {k: v[0] for k, v in parse_qs(urlsplit(url).query).items()}
    platform.handle_questionnaire_callback(params)
    platform.navigator.advance(platform.get_participant(participant.uuid))
    with pytest.raises(OutOfSequence):
        platform.handle_questionnaire_callback(params)
    assert platform.get_participant(participant.uuid).progress == 1


def test_tampered_callback_params_fail(platform):
    study_id = simple_study(platform, quest_el("q"), quest_el("q2"))
    participant = register(platform, study_id)
    from urllib.parse import parse_qs, urlsplit

    url = platform.build_questionnaire_url(participant, 0)
    params = {k: v[0] for k, v in parse_qs(urlsplit(url).query).items()}
    params["step"] = "1"  # try to open a later gate
    with pytest.raises(AuthFailure):
        platform.handle_questionnaire_callback(params)


# -- no-skip property ---------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_random_interleavings_never_skip(seed):
    # Fresh platform per example: hypothesis requires isolated state.
    from studyalign.clock import ManualClock
    from studyalign.ids import IdSource
    from studyalign.service import Platform
    from studyalign.store import MemoryStore

    from helpers import TODAY

    platform = Platform(MemoryStore(), clock=ManualClock(TODAY), ids=IdSource(seed=seed), secret="s")
    study_id = make_active_study(
        platform, steps(text_el("t"), cond_el("c"), quest_el("q"), text_el("end"))
    )
    reg = platform.register_participant(study_id)
    participant_uuid = reg["participant_uuid"]
    rng = random.Random(seed)

    finished_at = set()  # progress values whose gate we opened
    model_progress = 0
    observed = [0]
    gated = {1: "condition", 2: "questionnaire"}

    for _ in range(rng.randint(4, 14)):
        op = rng.choice(["finish", "advance", "callback", "connect"])
        participant = platform.get_participant(participant_uuid)
        try:
            if op == "finish":
                step = rng.randint(0, 3)
                platform.navigator.signal_task_finished(participant, step)
                assert step == model_progress and step in gated
                finished_at.add(step)
            elif op == "callback":
                step = rng.randint(0, 3)
                sig = sign_handoff(platform.secret, participant_uuid, study_id, step)
                platform.handle_questionnaire_callback(
                    {"participant": participant_uuid, "study": study_id, "step": str(step), "sig": sig}
                )
                assert step == model_progress and gated.get(step) == "questionnaire"
                finished_at.add(step)
            elif op == "connect":
                step = rng.randint(0, 3)
                stream = platform.navigator.connect(participant, step)
                assert step == model_progress and step in gated
                platform.navigator.hub.detach(participant_uuid, stream)
            else:
                result = platform.navigator.advance(participant)
                if model_progress in gated:
                    assert model_progress in finished_at, "advanced past an unfinished gate"
                model_progress += 1
                assert result["progress"] == model_progress
        except DomainError:
            pass
        progress = platform.get_participant(participant_uuid).progress
        observed.append(progress)
        assert progress == model_progress

    assert observed == sorted(observed), "progress must be monotonic"

from __future__ import annotations

import pytest

from studyalign.clock import ManualClock
from studyalign.ids import IdSource
from studyalign.service import Platform
from studyalign.store import MemoryStore

from harness import ServerHarness
from helpers import TODAY


@pytest.fixture
def clock() -> ManualClock:
    return ManualClock(TODAY)


@pytest.fixture
def platform(clock) -> Platform:
    return Platform(
        MemoryStore(),
        clock=clock,
        ids=IdSource(seed=7),
        secret="test-secret",
        heartbeat_seconds=0.05,
    )


@pytest.fixture
def server(platform):
    harness = ServerHarness(platform).start()
    yield harness
    harness.stop()
